#pragma once

#include <vector>

#include "dsrf/imgcore/image.hpp"

namespace dsrf {

/// Keys cubic convolution kernel (a = -0.5), MATLAB imresize convention. When
/// downscaling with antialiasing the kernel is stretched by 1/scale and its
/// height reduced by scale, so it acts as a low-pass prefilter.
struct ResampleKernel {
  double support = 4.0;
  bool antialias = true;

  static double cubic(double x);

  /// Effective kernel width at a given scale (output samples per input sample).
  double width(double scale) const;
  double weight(double x, double scale) const;
};

/// Sparse resampling matrix for one axis: out[j] = sum_k weight[j*taps+k] * in[index[j*taps+k]].
/// Indices are already reflected into [0, in_len).
struct AxisWeights {
  int in_len = 0;
  int out_len = 0;
  int taps = 0;
  std::vector<int> index;
  std::vector<double> weight;
};

/// Weights mapping output sample j (continuous center j + 0.5) to input continuous
/// coordinate (j + 0.5) * in_per_out + offset. Rows are normalized to sum to one.
AxisWeights axis_weights(int in_len, int out_len, double in_per_out, double offset,
                         const ResampleKernel& kernel = {});

/// Plain resize: in_per_out = in_len / out_len, offset 0.
AxisWeights resize_weights(int in_len, int out_len, const ResampleKernel& kernel = {});

/// Separable bicubic resize with antialiasing on downscale and symmetric edges.
/// The axis with the smaller scale is processed first; output is clamped to [0,1].
Image resize_bicubic(const Image& img, int out_h, int out_w);

/// Separable bicubic resampling of an axis-aligned affine region: output pixel center
/// (x + 0.5, y + 0.5) reads the input at (x + 0.5) * sx + ox, (y + 0.5) * sy + oy.
Image resample_bicubic(const Image& img, int out_h, int out_w, double sy, double oy, double sx,
                       double ox);

/// Nearest-neighbour resize with half-pixel centers; every output value is an exact copy.
Image resize_nearest(const Image& img, int out_h, int out_w);

/// Source index used by resize_nearest for output index j.
int nearest_source_index(int j, int in_len, int out_len);

}  // namespace dsrf
