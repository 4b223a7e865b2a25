#pragma once

#include <span>
#include <vector>

#include "dsrf/imgcore/image.hpp"

namespace dsrf {

/// Sampled, normalized Gaussian with radius ceil(truncate * sigma).
std::vector<double> gaussian_kernel(double sigma, double truncate = 4.0);

/// Separable correlation with an odd-length 1-D kernel along both axes, symmetric edges.
/// No clamping: linear filters keep [0,1] inputs in range when the kernel is non-negative.
Image filter_separable(const Image& img, std::span<const double> kx, std::span<const double> ky);

/// Gaussian blur with symmetric edges. sigma <= 0 returns the input.
Image gaussian_blur(const Image& img, double sigma);

/// Sobel gradient magnitude of a single-channel image (replicated edges).
Image sobel_magnitude(const Image& gray);

/// Sobel gradients (gx, gy) of a single-channel image.
void sobel(const Image& gray, Image& gx, Image& gy);

}  // namespace dsrf
