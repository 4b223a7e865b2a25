#include "dsrf/registration/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dsrf::registration {

double ReportRow::mean_ncc() const { return candidates > 0 ? ncc_sum / candidates : 0.0; }

double ReportRow::mean_alignment_error() const {
  return error_count > 0 ? error_sum / error_count : std::numeric_limits<double>::quiet_NaN();
}

ReportRow& ValidationReport::row(Split split, int altitude) {
  auto& r = rows_[{static_cast<int>(split), altitude}];
  r.split = split;
  r.altitude = altitude;
  return r;
}

void ValidationReport::add_patch(Split split, int altitude, const PatchPair& pp, std::optional<double> err) {
  auto& r = row(split, altitude);
  ++r.candidates;
  if (pp.valid) {
    ++r.valid;
  } else {
    ++r.invalid;
  }
  if (pp.fallback) ++r.fallback;
  r.ncc_sum += pp.ncc;
  r.ncc_min = std::min(r.ncc_min, pp.ncc);
  if (err) {
    r.error_sum += *err;
    ++r.error_count;
  }
}

void ValidationReport::add_failure(Split split, int altitude) { ++row(split, altitude).failed_scenes; }

void ValidationReport::merge(const ValidationReport& other) {
  for (const auto& [key, o] : other.rows_) {
    auto& r = row(o.split, o.altitude);
    r.candidates += o.candidates;
    r.valid += o.valid;
    r.invalid += o.invalid;
    r.fallback += o.fallback;
    r.failed_scenes += o.failed_scenes;
    r.ncc_sum += o.ncc_sum;
    r.ncc_min = std::min(r.ncc_min, o.ncc_min);
    r.error_sum += o.error_sum;
    r.error_count += o.error_count;
  }
}

std::vector<ReportRow> ValidationReport::rows() const {
  std::vector<ReportRow> out;
  for (const auto& [key, r] : rows_) out.push_back(r);
  return out;
}

ReportRow ValidationReport::totals() const {
  ReportRow t;
  for (const auto& [key, r] : rows_) {
    t.candidates += r.candidates;
    t.valid += r.valid;
    t.invalid += r.invalid;
    t.fallback += r.fallback;
    t.failed_scenes += r.failed_scenes;
    t.ncc_sum += r.ncc_sum;
    t.ncc_min = std::min(t.ncc_min, r.ncc_min);
    t.error_sum += r.error_sum;
    t.error_count += r.error_count;
  }
  return t;
}

int ValidationReport::total_candidates() const { return totals().candidates; }
int ValidationReport::total_failures() const { return totals().failed_scenes; }

std::string ValidationReport::to_csv() const {
  std::ostringstream os;
  os.precision(6);
  os << "split,altitude,candidates,valid,invalid,fallback,failed_scenes,mean_ncc,min_ncc,mean_alignment_error\n";
  for (const auto& [key, r] : rows_) {
    os << to_string(r.split) << "," << r.altitude << "," << r.candidates << "," << r.valid << "," << r.invalid
       << "," << r.fallback << "," << r.failed_scenes << ",";
    if (r.candidates > 0) {
      os << r.mean_ncc() << "," << r.ncc_min;
    } else {
      os << ",";
    }
    os << ",";
    if (r.error_count > 0) os << r.mean_alignment_error();
    os << "\n";
  }
  return os.str();
}

}  // namespace dsrf::registration
