#include "dsrf/cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace dsrf::cli {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string psd_svg(const std::vector<std::pair<std::string, analysis::RadialPSD>>& curves) {
  const double W = 640, H = 420, left = 60, right = 130, top = 20, bottom = 50;
  double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
  for (const auto& [label, psd] : curves) {
    for (double v : psd.log_power) {
      if (!std::isfinite(v)) continue;
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  }
  if (!std::isfinite(ymin)) ymin = 0.0, ymax = 1.0;
  if (ymax - ymin < 1e-9) ymax = ymin + 1.0;
  const double pw = W - left - right, ph = H - top - bottom;
  auto sx = [&](double f) { return left + f / 0.5 * pw; };
  auto sy = [&](double v) { return top + (ymax - v) / (ymax - ymin) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 5; ++t) {
    const double f = 0.1 * t;
    o << "<text x=\"" << fmt(sx(f)) << "\" y=\"" << H - bottom + 18 << "\" font-size=\"11\" text-anchor=\"middle\">"
      << fmt(f) << "</text>\n";
    const double v = ymin + (ymax - ymin) * t / 5.0;
    o << "<text x=\"" << left - 6 << "\" y=\"" << fmt(sy(v) + 4) << "\" font-size=\"11\" text-anchor=\"end\">" << fmt(v)
      << "</text>\n";
  }
  o << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 10
    << "\" font-size=\"12\" text-anchor=\"middle\">frequency (cycles/px)</text>\n";
  o << "<text x=\"14\" y=\"" << top + ph / 2 << "\" font-size=\"12\" transform=\"rotate(-90 14 " << top + ph / 2
    << ")\" text-anchor=\"middle\">log10 power</text>\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& [label, psd] = curves[i];
    const char* color = kPalette[i % std::size(kPalette)];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < psd.frequency.size(); ++k) {
      if (!std::isfinite(psd.log_power[k])) continue;
      o << fmt(sx(psd.frequency[k])) << "," << fmt(sy(psd.log_power[k])) << " ";
    }
    o << "\"/>\n";
    const double ly = top + 14 + 16.0 * i;
    o << "<line x1=\"" << W - right + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - right + 30 << "\" y2=\"" << ly
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << W - right + 36 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">" << label << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace dsrf::cli
