#pragma once

#include "dsrf/imgcore/image.hpp"

namespace dsrf::colorcorr {

constexpr int kHistogramBins = 1024;
constexpr double kTransferEpsilon = 1e-3;
constexpr double kDefaultTransferSigma = 15.0;

/// Per-channel CDF matching of src onto ref's distribution. Values are quantized to
/// 1024 bins; a src bin maps through its mid-rank onto the piecewise-linear inverse of
/// ref's CDF. Throws InvalidInput on channel mismatch or empty inputs.
Image histogram_match(const Image& src, const Image& ref);

/// Low-frequency gain correction: out = src * (G(ref) + eps) / (G(src) + eps) with G a
/// Gaussian blur, gains clamped to [0.5, 2], output clamped to [0,1].
/// Throws InvalidInput unless src and ref have the same shape.
Image color_transfer(const Image& src, const Image& ref, double blur_sigma = kDefaultTransferSigma);

}  // namespace dsrf::colorcorr
