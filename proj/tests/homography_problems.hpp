#pragma once

#include <cmath>
#include <algorithm>
#include <array>
#include <random>
#include <vector>

#include "dsrf/geometry/homography.hpp"

namespace dsrf::test {

struct HomographyProblem {
  geometry::Homography truth;
  std::vector<geometry::Correspondence> corr;
  std::vector<bool> is_inlier;
  std::vector<geometry::Point2> clean_src;  ///< source points of the inliers, noise-free
};

/// Random homography (rotation, anisotropic scale, translation, mild perspective) on a
/// 1000x800 domain; inliers get Gaussian noise on the destination, outliers are uniform.
inline HomographyProblem make_homography_problem(std::uint64_t seed, int n = 100, double outlier_fraction = 0.5,
                                                 double noise_sigma = 0.3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double th = (u(rng) - 0.5) * 0.6;
  const double s = 0.8 + 0.6 * u(rng);
  const double a = 1.0 + 0.1 * (u(rng) - 0.5);
  const std::array<double, 9> m{s * a * std::cos(th), -s * std::sin(th), 100 * (u(rng) - 0.5),
                                s * std::sin(th),     s * std::cos(th) / a, 100 * (u(rng) - 0.5),
                                2e-4 * (u(rng) - 0.5), 2e-4 * (u(rng) - 0.5), 1.0};
  HomographyProblem p;
  p.truth = geometry::Homography(m);
  std::normal_distribution<double> noise(0.0, noise_sigma);
  const int n_out = static_cast<int>(std::lround(n * outlier_fraction));
  std::vector<bool> outlier(n, false);
  for (int i = 0; i < n_out; ++i) outlier[i] = true;
  std::shuffle(outlier.begin(), outlier.end(), rng);
  for (int i = 0; i < n; ++i) {
    const geometry::Point2 src{1000 * u(rng), 800 * u(rng)};
    geometry::Point2 dst;
    if (outlier[i]) {
      dst = {1200 * u(rng) - 100, 1000 * u(rng) - 100};
    } else {
      dst = p.truth.apply(src);
      dst.x += noise(rng);
      dst.y += noise(rng);
      p.clean_src.push_back(src);
    }
    p.corr.push_back({src, dst});
    p.is_inlier.push_back(!outlier[i]);
  }
  return p;
}

/// Mean symmetric transfer error of an estimate against the true mapping of the clean inliers.
inline double mean_recovery_error(const HomographyProblem& p, const geometry::Homography& est) {
  const geometry::Homography inv = est.inverse();
  double sum = 0.0;
  for (const auto& s : p.clean_src) {
    sum += geometry::symmetric_transfer_error(est, inv, {s, p.truth.apply(s)});
  }
  return sum / p.clean_src.size();
}

}  // namespace dsrf::test
