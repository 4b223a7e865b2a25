#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dsrf/geometry/homography.hpp"

namespace dsrf::geometry {

struct RansacParams {
  double inlier_thresh_px = 3.0;
  int max_iters = 2000;
  double confidence = 0.99;
  std::uint64_t seed = 0;
};

struct RansacResult {
  Homography h;
  std::vector<bool> inliers;
  int n_inliers = 0;
  int iterations = 0;
};

/// 4-point sampling with symmetric transfer error scoring, adaptive iteration count and
/// a final DLT refit on the inlier set (repeated while the set grows). Hypothesis i
/// draws from an RNG seeded by (seed, i), so results do not depend on evaluation order.
/// Throws EstimationFailure when no model reaches 4 inliers.
RansacResult ransac_homography(std::span<const Correspondence> corr, const RansacParams& params = {});

}  // namespace dsrf::geometry
