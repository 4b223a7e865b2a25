#pragma once

#include "dsrf/imgcore/image.hpp"

namespace dsrf {

/// BT.601 studio-range luma: Y = (65.481 R + 128.553 G + 24.966 B + 16) / 255.
/// Output lies in [16/255, 235/255] for inputs in [0,1].
Image rgb_to_y(const Image& rgb);

/// Luma for 3-channel inputs, the image itself for single-channel inputs.
Image luminance(const Image& img);

}  // namespace dsrf
