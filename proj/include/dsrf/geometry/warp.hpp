#pragma once

#include "dsrf/geometry/homography.hpp"
#include "dsrf/imgcore/image.hpp"

namespace dsrf::geometry {

struct WarpResult {
  Image image;
  Image mask;             ///< 1 where the source covered the output pixel, else 0
  double coverage = 0.0;  ///< fraction of covered output pixels
};

/// Inverse-mapping warp: output pixel center p reads the source at h^-1(p) with bilinear
/// interpolation. h maps source coordinates to output coordinates. Uncovered pixels are 0.
/// Throws InvalidInput when h is not invertible.
WarpResult warp_image(const Image& img, const Homography& h, int out_h, int out_w);

/// Bilinear sample of channel c at continuous coordinates (x, y); taps clamp to the border.
double sample_bilinear(const Image& img, int c, double x, double y);

}  // namespace dsrf::geometry
