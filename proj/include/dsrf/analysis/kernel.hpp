#pragma once

#include <span>
#include <string>
#include <vector>

#include "dsrf/imgcore/image.hpp"

namespace dsrf::analysis {

struct BlurKernel {
  int support = 21;
  std::vector<double> weights;  ///< support x support, row-major, sums to 1
  /// Centroid offset from the kernel center before integer re-centering (px).
  double raw_centroid_x = 0.0;
  double raw_centroid_y = 0.0;

  double at(int y, int x) const { return weights[static_cast<std::size_t>(y) * support + x]; }
  double sum() const;
  /// Mean squared distance from the center, weighted by the kernel.
  double second_moment() const;
  /// L2 norm of a - b over the L2 norm of b (shapes must match).
  static double relative_l2(const BlurKernel& a, const BlurKernel& b);
  std::string to_csv() const;
  /// Grayscale rendering scaled to the peak weight.
  Image to_image() const;
};

struct KernelPair {
  Image hr;
  Image lr;  ///< upsampled to the HR grid with bicubic when sizes differ
};

struct KernelOptions {
  int support = 21;
  /// Tikhonov weight relative to the mean HR power spectrum.
  double lambda = 1e-3;
};

/// Fourier-domain Tikhonov estimate of k in lr_up = hr * k on luma, Hann-windowed,
/// averaged over pairs, clipped to non-negative, re-centered and normalized.
/// Throws InvalidInput for an empty list, even support or non-positive lambda.
BlurKernel estimate_blur_kernel(std::span<const KernelPair> pairs, const KernelOptions& opts = {});

/// Antialiased cubic (a = -0.5) low-pass at the given scale, sampled on the support grid
/// and normalized. Scale 1 gives a discrete delta.
BlurKernel bicubic_reference_kernel(double scale, int support = 21);

/// Sampled Gaussian on the support grid, normalized.
BlurKernel gaussian_reference_kernel(double sigma, int support = 21);

}  // namespace dsrf::analysis
