#include "dsrf/registration/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "dsrf/colorcorr/colorcorr.hpp"
#include "dsrf/features/match.hpp"
#include "dsrf/geometry/warp.hpp"
#include "dsrf/imgcore/color.hpp"
#include "dsrf/imgcore/resample.hpp"
#include "dsrf/metrics/metrics.hpp"

namespace dsrf::registration {

using geometry::Correspondence;
using geometry::Point2;

namespace {

constexpr int kMinFovInliers = 10;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (k + 1);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Matches two luma images; dst keypoints are scaled by dst_scale.
std::vector<Correspondence> correspond(const Image& src, const Image& dst, double dst_scale,
                                       const PipelineConfig& cfg, FailureDiagnostics& diag) {
  const auto fs = features::detect_and_describe(src, cfg.sift);
  const auto fd = features::detect_and_describe(dst, cfg.sift);
  diag.lr_keypoints = static_cast<int>(fs.keypoints.size());
  diag.hr_keypoints = static_cast<int>(fd.keypoints.size());
  const auto matches = features::match_descriptors(fs.descriptors, fd.descriptors, cfg.match_ratio);
  diag.matches = static_cast<int>(matches.size());
  std::vector<Correspondence> corr;
  corr.reserve(matches.size());
  for (const auto& m : matches) {
    const auto& a = fs.keypoints[m.src];
    const auto& b = fd.keypoints[m.dst];
    corr.push_back({{a.x, a.y}, {b.x * dst_scale, b.y * dst_scale}});
  }
  return corr;
}

Rect expand(const Rect& r, int margin, int w, int h) {
  const int x0 = std::max(0, r.x - margin);
  const int y0 = std::max(0, r.y - margin);
  const int x1 = std::min(w, r.x + r.width + margin);
  const int y1 = std::min(h, r.y + r.height + margin);
  return {x0, y0, x1 - x0, y1 - y0};
}

// Content at the LR sampling rate, resampled back onto the original grid.
Image degrade(const Image& img, double up) {
  const int lh = std::max(1, static_cast<int>(std::ceil(img.height() * up)));
  const int lw = std::max(1, static_cast<int>(std::ceil(img.width() * up)));
  const Image low = resample_bicubic(img, lh, lw, 1.0 / up, 0.0, 1.0 / up, 0.0);
  return resample_bicubic(low, img.height(), img.width(), up, 0.0, up, 0.0);
}

// Cross-validated prediction error (mean distance) of a homography refit on the inliers,
// with up to kFolds interleaved folds.
double cv_error(std::span<const geometry::Correspondence> corr, const std::vector<bool>& inliers) {
  constexpr std::size_t kFolds = 10;
  std::vector<geometry::Correspondence> in;
  for (std::size_t i = 0; i < corr.size(); ++i) {
    if (inliers[i]) in.push_back(corr[i]);
  }
  if (in.size() < 6) return std::numeric_limits<double>::infinity();
  const std::size_t folds = std::min(kFolds, in.size());
  double sum = 0.0;
  std::vector<geometry::Correspondence> train;
  for (std::size_t f = 0; f < folds; ++f) {
    train.clear();
    for (std::size_t k = 0; k < in.size(); ++k) {
      if (k % folds != f) train.push_back(in[k]);
    }
    try {
      const Homography h = geometry::estimate_homography_dlt(train);
      for (std::size_t k = f; k < in.size(); k += folds) {
        const Point2 q = h.apply(in[k].src);
        sum += std::hypot(q.x - in[k].dst.x, q.y - in[k].dst.y);
      }
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  }
  return sum / in.size();
}

double mean_error(const Homography& h, std::span<const geometry::Correspondence> corr, const std::vector<bool>& inliers) {
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < corr.size(); ++i) {
    if (!inliers[i]) continue;
    const Point2 q = h.apply(corr[i].src);
    sum += std::hypot(q.x - corr[i].dst.x, q.y - corr[i].dst.y);
    ++n;
  }
  return n ? sum / n : std::numeric_limits<double>::infinity();
}

double max_corner_displacement(const Homography& h, double size) {
  double worst = 0;
  for (const Point2 p : {Point2{0, 0}, Point2{size, 0}, Point2{0, size}, Point2{size, size}}) {
    const Point2 q = h.apply(p);
    worst = std::max(worst, std::hypot(q.x - p.x, q.y - p.y));
  }
  return worst;
}

}  // namespace

void PipelineConfig::validate() const {
  if (fov_width <= 0 || fov_height <= 0) throw InvalidInput("FOV size must be positive");
  if (patch <= 0 || stride <= 0) throw InvalidInput("patch and stride must be positive");
  if (patch > fov_width || patch > fov_height) throw InvalidInput("patch larger than the FOV");
  if (!(ncc_thresh >= -1.0 && ncc_thresh <= 1.0)) throw InvalidInput("NCC threshold must lie in [-1, 1]");
  if (!(match_ratio > 0.0 && match_ratio < 1.0)) throw InvalidInput("match ratio must lie in (0, 1)");
  if (search_margin < 0 || source_margin < 0) throw InvalidInput("margins must be non-negative");
  if (local_max_keypoints < 4) throw InvalidInput("local keypoint cap must be at least 4");
  if (!(local_contrast_threshold > 0.0)) throw InvalidInput("local contrast threshold must be positive");
  if (!(local_gain > 0.0 && local_gain <= 1.0)) throw InvalidInput("local gain must lie in (0, 1]");
  if (!(max_local_correction > 0.0)) throw InvalidInput("max local correction must be positive");
}

bool scale_is_exact(int fov_width, int hr_width) {
  return static_cast<long long>(fov_width) * 50 == static_cast<long long>(hr_width) * 9;
}

std::vector<std::pair<int, int>> patch_grid(int fov_width, int fov_height, int patch, int stride) {
  std::vector<std::pair<int, int>> out;
  for (int y = 0; y + patch <= fov_height; y += stride) {
    for (int x = 0; x + patch <= fov_width; x += stride) out.emplace_back(x, y);
  }
  return out;
}

RegisteredPair match_fov(const Image& lr, const Image& hr, const PipelineConfig& cfg) {
  cfg.validate();
  if (lr.empty() || hr.empty()) throw InvalidInput("match_fov: empty image");
  if (lr.channels() != hr.channels()) throw InvalidInput("match_fov: LR and HR channel counts differ");
  if (static_cast<long long>(hr.width()) * cfg.fov_height != static_cast<long long>(hr.height()) * cfg.fov_width) {
    throw InvalidInput("match_fov: HR aspect ratio differs from the FOV size");
  }
  if (cfg.require_exact_scale && !scale_is_exact(cfg.fov_width, hr.width())) {
    throw InvalidInput("match_fov: HR width is not exactly 50/9 of the FOV width");
  }
  const double scale = static_cast<double>(hr.width()) / cfg.fov_width;

  FailureDiagnostics diag;
  diag.stage = "fov";
  const Image hr_small = resize_bicubic(hr, cfg.fov_height, cfg.fov_width);
  std::vector<Correspondence> corr;
  try {
    corr = correspond(luminance(lr), luminance(hr_small), scale, cfg, diag);
  } catch (const InvalidInput& e) {
    throw RegistrationFailure(std::string("feature detection failed: ") + e.what(), diag);
  }
  if (static_cast<int>(corr.size()) < cfg.min_matches) {
    throw RegistrationFailure("too few feature matches for FOV matching", diag);
  }
  geometry::RansacResult rr;
  try {
    rr = geometry::ransac_homography(corr, {cfg.ransac_thresh, cfg.ransac_iters, 0.99, cfg.seed});
  } catch (const EstimationFailure& e) {
    throw RegistrationFailure(std::string("RANSAC failed: ") + e.what(), diag);
  }
  diag.inliers = rr.n_inliers;
  if (rr.n_inliers < kMinFovInliers) throw RegistrationFailure("too few RANSAC inliers", diag);

  RegisteredPair out;
  out.lr_to_hr = rr.h;
  out.n_matches = diag.matches;
  out.n_inliers = rr.n_inliers;

  // Bounding box of the HR extent back-projected into LR.
  double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
  try {
    const Homography inv = rr.h.inverse();
    const double W = hr.width(), H = hr.height();
    for (const Point2 c : {Point2{0, 0}, Point2{W, 0}, Point2{W, H}, Point2{0, H}}) {
      const Point2 p = inv.apply(c);
      x0 = std::min(x0, p.x);
      y0 = std::min(y0, p.y);
      x1 = std::max(x1, p.x);
      y1 = std::max(y1, p.y);
    }
  } catch (const Error& e) {
    throw RegistrationFailure(std::string("degenerate FOV homography: ") + e.what(), diag);
  }
  const int rx0 = static_cast<int>(std::clamp(std::lround(x0), 0L, static_cast<long>(lr.width())));
  const int ry0 = static_cast<int>(std::clamp(std::lround(y0), 0L, static_cast<long>(lr.height())));
  const int rx1 = static_cast<int>(std::clamp(std::lround(x1), 0L, static_cast<long>(lr.width())));
  const int ry1 = static_cast<int>(std::clamp(std::lround(y1), 0L, static_cast<long>(lr.height())));
  if (rx1 - rx0 < features::kMinFeatureImageSide || ry1 - ry0 < features::kMinFeatureImageSide) {
    throw RegistrationFailure("matched FOV is too small", diag);
  }
  out.fov_rect = {rx0, ry0, rx1 - rx0, ry1 - ry0};
  out.source_rect = expand(out.fov_rect, cfg.source_margin, lr.width(), lr.height());
  out.lr_source = crop(lr, out.source_rect);
  out.source_to_hr = rr.h * Homography::translation(out.source_rect.x, out.source_rect.y);
  out.fov_to_source =
      Homography::translation(out.fov_rect.x - out.source_rect.x, out.fov_rect.y - out.source_rect.y) *
      Homography::scaling(static_cast<double>(out.fov_rect.width) / cfg.fov_width,
                          static_cast<double>(out.fov_rect.height) / cfg.fov_height);
  out.fov_homography = out.source_to_hr * out.fov_to_source;

  if (cfg.color_correct) {
    // HR content brought into the LR source frame through the FOV-sized HR image.
    const Homography small_to_source =
        (Homography::scaling(1.0 / scale) * out.source_to_hr).inverse();
    auto ref = geometry::warp_image(hr_small, small_to_source, out.lr_source.height(), out.lr_source.width());
    for (int c = 0; c < ref.image.channels(); ++c) {
      for (int y = 0; y < ref.image.height(); ++y) {
        for (int x = 0; x < ref.image.width(); ++x) {
          if (ref.mask.at(0, y, x) == 0.0f) ref.image.at(c, y, x) = out.lr_source.at(c, y, x);
        }
      }
    }
    const double sigma = cfg.transfer_sigma * cfg.fov_width / 720.0 * out.fov_rect.width / cfg.fov_width;
    out.lr_source = colorcorr::histogram_match(colorcorr::color_transfer(out.lr_source, ref.image, sigma), ref.image);
    out.color_corrected = true;
  }

  const Rect inner{out.fov_rect.x - out.source_rect.x, out.fov_rect.y - out.source_rect.y, out.fov_rect.width,
                   out.fov_rect.height};
  out.lr_fov = resize_nearest(crop(out.lr_source, inner), cfg.fov_height, cfg.fov_width);
  out.hr = hr;
  return out;
}

PatchPair refine_patch_alignment(const RegisteredPair& pair, int patch_x, int patch_y, const PipelineConfig& cfg) {
  const int p = cfg.patch;
  const int fov_w = pair.lr_fov.width();
  const int fov_h = pair.lr_fov.height();
  if (patch_x < 0 || patch_y < 0 || patch_x + p > fov_w || patch_y + p > fov_h) {
    throw InvalidInput("refine_patch_alignment: patch outside the FOV");
  }
  const int hr_w = pair.hr.width();
  const int hr_h = pair.hr.height();
  if (static_cast<long long>(p) * hr_w % fov_w != 0) {
    throw InvalidInput("refine_patch_alignment: HR patch size is not an integer");
  }
  const int P = static_cast<int>(static_cast<long long>(p) * hr_w / fov_w);
  if (P > hr_w || P > hr_h) throw InvalidInput("refine_patch_alignment: HR patch larger than HR image");

  PatchPair pp;
  pp.lr_rect = {patch_x, patch_y, p, p};
  const Point2 center = pair.fov_homography.apply({patch_x + 0.5 * p, patch_y + 0.5 * p});
  const int ox = static_cast<int>(std::clamp(std::lround(center.x - 0.5 * P), 0L, static_cast<long>(hr_w - P)));
  const int oy = static_cast<int>(std::clamp(std::lround(center.y - 0.5 * P), 0L, static_cast<long>(hr_h - P)));
  pp.hr_rect = {ox, oy, P, P};
  pp.hr_patch = crop(pair.hr, pp.hr_rect);

  const Homography& global = pair.source_to_hr;
  Homography refined = global;
  pp.fallback = true;
  const auto& a = pair.fov_to_source.matrix();
  const double up = static_cast<double>(p) / P;
  // Upsampled LR patch: pixel u reads lr_source at a * (patch + u * p / P) + b.
  const Image upsampled = resample_bicubic(pair.lr_source, P, P, a[4] * up, a[4] * patch_y + a[5], a[0] * up,
                                           a[0] * patch_x + a[2]);
  const Rect region = expand(pp.hr_rect, cfg.search_margin, hr_w, hr_h);
  try {
    FailureDiagnostics diag;
    PipelineConfig local_cfg = cfg;
    local_cfg.sift.contrast_threshold = cfg.local_contrast_threshold;
    local_cfg.sift.max_keypoints = cfg.local_max_keypoints;
    const auto corr = correspond(luminance(upsampled), degrade(luminance(crop(pair.hr, region)), up), 1.0, local_cfg, diag);
    if (static_cast<int>(corr.size()) >= std::max(4, cfg.min_local_inliers)) {
      const std::uint64_t seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(patch_y) * 65536 + patch_x);
      const auto rr = geometry::ransac_homography(corr, {cfg.ransac_thresh, cfg.ransac_iters, 0.99, seed});
      pp.local_inliers = rr.n_inliers;
      if (rr.n_inliers >= cfg.min_local_inliers) {
        const Homography cand = Homography::translation(region.x, region.y) * rr.h * Homography::scaling(1.0 / up) *
                                Homography::translation(-patch_x, -patch_y) * pair.fov_to_source.inverse();
        const Homography corr_h = Homography::translation(-ox, -oy) * cand * global.inverse() *
                                  Homography::translation(ox, oy);
        // The global transform expressed between the same two local frames; the local fit
        // must predict held-out inliers better than it.
        const Homography global_local = Homography::translation(-region.x, -region.y) * global *
                                        pair.fov_to_source * Homography::translation(patch_x, patch_y) *
                                        Homography::scaling(up);
        pp.local_residual = cv_error(corr, rr.inliers);
        pp.global_residual = mean_error(global_local, corr, rr.inliers);
        if (pp.local_residual < cfg.local_gain * pp.global_residual && max_corner_displacement(corr_h, P) <= cfg.max_local_correction) {
          refined = cand;
          pp.local_homography = corr_h;
          pp.fallback = false;
        }
      }
    }
  } catch (const Error&) {
    // keep the global transform
  }

  pp.lr_to_hr = refined * Homography::translation(-pair.source_rect.x, -pair.source_rect.y);
  pp.source_to_patch = Homography::scaling(up) * Homography::translation(-ox, -oy) * refined;
  pp.lr_patch = geometry::warp_image(pair.lr_source, pp.source_to_patch, p, p).image;
  return validate_pair(std::move(pp), cfg.ncc_thresh);
}

PatchPair validate_pair(PatchPair pp, double ncc_thresh) {
  if (pp.lr_patch.empty() || pp.hr_patch.empty()) throw InvalidInput("validate_pair: missing patches");
  const Image up = resize_bicubic(pp.lr_patch, pp.hr_patch.height(), pp.hr_patch.width());
  try {
    pp.ncc = metrics::ncc(luminance(up), luminance(pp.hr_patch));
  } catch (const UndefinedCorrelation&) {
    pp.ncc = 0.0;
  }
  pp.valid = pp.ncc >= ncc_thresh;
  return pp;
}

std::vector<PatchPair> extract_patches(const RegisteredPair& pair, const PipelineConfig& cfg) {
  std::vector<PatchPair> out;
  int index = 0;
  for (const auto& [x, y] : patch_grid(pair.lr_fov.width(), pair.lr_fov.height(), cfg.patch, cfg.stride)) {
    auto pp = refine_patch_alignment(pair, x, y, cfg);
    pp.index = index++;
    out.push_back(std::move(pp));
  }
  return out;
}

double alignment_error(const Homography& est_lr_to_hr, const Homography& truth_lr_to_hr, const Rect& r) {
  const Homography truth_inv = truth_lr_to_hr.inverse();
  const double x0 = r.x, y0 = r.y, x1 = r.x + r.width, y1 = r.y + r.height;
  double sum = 0;
  int n = 0;
  for (const Point2 q : {Point2{x0, y0}, Point2{x1, y0}, Point2{x0, y1}, Point2{x1, y1},
                         Point2{0.5 * (x0 + x1), 0.5 * (y0 + y1)}}) {
    const Point2 e = est_lr_to_hr.apply(truth_inv.apply(q));
    sum += std::hypot(e.x - q.x, e.y - q.y);
    ++n;
  }
  return sum / n;
}

}  // namespace dsrf::registration
