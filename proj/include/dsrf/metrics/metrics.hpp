#pragma once

#include "dsrf/imgcore/image.hpp"

namespace dsrf::metrics {

constexpr int kDefaultShave = 6;
constexpr double kPsnrCap = 100.0;

struct EvalOptions {
  int shave = kDefaultShave;
  /// Round RGB and Y to 8-bit levels before comparing.
  bool quantize_8bit = false;
};

struct PsnrResult {
  double db = 0.0;
  double mse = 0.0;
  bool exact_match = false;  ///< MSE == 0; db is then the cap
};

/// PSNR on BT.601 luma in the 0-255 range with `shave` pixels removed on every side.
/// Single-channel inputs are taken to be luma already. Throws InvalidInput on shape mismatch
/// or when the shave leaves nothing.
PsnrResult psnr_y(const Image& pred, const Image& ref, const EvalOptions& opts = {});

/// Single-scale SSIM on luma (11x11 Gaussian window, sigma 1.5, K1 0.01, K2 0.03, L 255),
/// averaged over valid window positions after shaving. Throws InvalidInput when the shaved
/// image is smaller than 11x11.
double ssim_y(const Image& pred, const Image& ref, const EvalOptions& opts = {});

/// Zero-mean unit-variance correlation of two single-channel images, computed in double.
/// Throws UndefinedCorrelation when either input has zero variance.
double ncc(const Image& a, const Image& b);

/// Luma in 0-255, shaved, as doubles (row-major). Exposed for tests.
std::vector<double> eval_luma(const Image& img, const EvalOptions& opts, int& out_h, int& out_w);

}  // namespace dsrf::metrics
