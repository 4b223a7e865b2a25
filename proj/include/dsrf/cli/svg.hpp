#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dsrf/analysis/psd.hpp"

namespace dsrf::cli {

/// Line plot of log10 power against frequency, one polyline per labelled curve.
std::string psd_svg(const std::vector<std::pair<std::string, analysis::RadialPSD>>& curves);

}  // namespace dsrf::cli
