#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dsrf/imgcore/image.hpp"

namespace dsrf {

enum class BayerPattern { RGGB, BGGR, GRBG, GBRG };

std::string to_string(BayerPattern p);
BayerPattern parse_bayer_pattern(const std::string& s);

/// Single-sensor mosaic with 16-bit samples. Black level is carried as metadata only.
struct BayerRaw {
  int height = 0;
  int width = 0;
  std::vector<std::uint16_t> data;
  BayerPattern pattern = BayerPattern::RGGB;
  int black_level = 0;

  std::uint16_t at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

/// 4 x (h/2) x (w/2) image; channels are the top-left, top-right, bottom-left and
/// bottom-right sample of each 2x2 block, scaled by 1/65535.
Image pack_bayer(const BayerRaw& raw);

/// Inverse of pack_bayer (bit-exact for images produced by it).
BayerRaw unpack_bayer(const Image& packed, BayerPattern pattern, int black_level = 0);

/// Mosaics an RGB image under the given pattern (synthetic RAW generation).
BayerRaw mosaic(const Image& rgb, BayerPattern pattern);

}  // namespace dsrf
