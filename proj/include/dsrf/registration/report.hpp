#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dsrf/registration/manifest.hpp"
#include "dsrf/registration/pipeline.hpp"

namespace dsrf::registration {

struct ReportRow {
  Split split = Split::train;
  int altitude = 0;
  int candidates = 0;
  int valid = 0;
  int invalid = 0;
  int fallback = 0;
  int failed_scenes = 0;
  double ncc_sum = 0.0;
  double ncc_min = 1.0;
  double error_sum = 0.0;
  int error_count = 0;

  double mean_ncc() const;
  /// NaN when no ground truth was available.
  double mean_alignment_error() const;
};

/// Per (split, altitude) patch counts and statistics; rows are kept in sorted key order.
class ValidationReport {
 public:
  void add_patch(Split split, int altitude, const PatchPair& pp, std::optional<double> alignment_error = {});
  void add_failure(Split split, int altitude);
  void merge(const ValidationReport& other);

  std::vector<ReportRow> rows() const;
  ReportRow totals() const;
  int total_candidates() const;
  int total_failures() const;

  std::string to_csv() const;

 private:
  ReportRow& row(Split split, int altitude);
  std::map<std::pair<int, int>, ReportRow> rows_;
};

}  // namespace dsrf::registration
