#include "dsrf/geometry/ransac.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "dsrf/core/error.hpp"

namespace dsrf::geometry {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Score {
  int count = 0;
  double error_sum = 0.0;
  bool better_than(const Score& o) const {
    return count > o.count || (count == o.count && error_sum < o.error_sum);
  }
};

Score score(const Homography& h, std::span<const Correspondence> corr, double thresh, std::vector<bool>* mask) {
  Score s;
  Homography inv;
  try {
    inv = h.inverse();
  } catch (const InvalidInput&) {
    if (mask) mask->assign(corr.size(), false);
    return s;
  }
  if (mask) mask->assign(corr.size(), false);
  for (std::size_t i = 0; i < corr.size(); ++i) {
    const double e = symmetric_transfer_error(h, inv, corr[i]);
    if (e < thresh) {
      ++s.count;
      s.error_sum += e;
      if (mask) (*mask)[i] = true;
    }
  }
  return s;
}

int required_iterations(double inlier_ratio, double confidence, int max_iters) {
  if (inlier_ratio <= 0.0) return max_iters;
  const double p = std::pow(inlier_ratio, 4);
  if (p >= 1.0) return 1;
  const double n = std::log(1.0 - confidence) / std::log(1.0 - p);
  if (!std::isfinite(n)) return max_iters;
  return std::clamp(static_cast<int>(std::ceil(n)), 1, max_iters);
}

}  // namespace

RansacResult ransac_homography(std::span<const Correspondence> corr, const RansacParams& params) {
  const std::size_t n = corr.size();
  if (n < 4) throw EstimationFailure("RANSAC needs at least 4 correspondences");
  if (!(params.inlier_thresh_px > 0.0)) throw InvalidInput("RANSAC threshold must be positive");
  if (params.max_iters < 1) throw InvalidInput("RANSAC needs at least one iteration");

  Homography best_h;
  Score best;
  bool have = false;
  int limit = params.max_iters;
  int it = 0;
  std::array<Correspondence, 4> sample;
  for (; it < limit; ++it) {
    std::mt19937_64 rng(splitmix64(params.seed ^ splitmix64(static_cast<std::uint64_t>(it))));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::array<std::size_t, 4> idx{};
    for (int k = 0; k < 4; ++k) {
      std::size_t v;
      do {
        v = pick(rng);
      } while (std::find(idx.begin(), idx.begin() + k, v) != idx.begin() + k);
      idx[k] = v;
    }
    for (int k = 0; k < 4; ++k) sample[k] = corr[idx[k]];
    Homography h;
    try {
      h = estimate_homography_dlt(sample);
    } catch (const EstimationFailure&) {
      continue;
    }
    const Score s = score(h, corr, params.inlier_thresh_px, nullptr);
    if (s.count >= 4 && (!have || s.better_than(best))) {
      best = s;
      best_h = h;
      have = true;
      limit = std::min(limit, required_iterations(static_cast<double>(s.count) / n, params.confidence,
                                                  params.max_iters));
    }
  }
  if (!have) throw EstimationFailure("RANSAC found no model with 4 inliers");

  RansacResult res;
  std::vector<bool> mask;
  score(best_h, corr, params.inlier_thresh_px, &mask);
  // Refit on inliers while the consensus set keeps growing.
  for (int round = 0; round < 10; ++round) {
    std::vector<Correspondence> in;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask[i]) in.push_back(corr[i]);
    }
    Homography refit;
    try {
      refit = estimate_homography_dlt(in);
    } catch (const EstimationFailure&) {
      break;
    }
    std::vector<bool> new_mask;
    const Score s = score(refit, corr, params.inlier_thresh_px, &new_mask);
    if (s.count < best.count) break;
    const bool grew = s.count > best.count;
    best = s;
    best_h = refit;
    mask = std::move(new_mask);
    if (!grew) break;
  }
  res.h = best_h;
  res.inliers = std::move(mask);
  res.n_inliers = best.count;
  res.iterations = it;
  return res;
}

}  // namespace dsrf::geometry
