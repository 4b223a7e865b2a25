#include "dsrf/imgcore/bayer.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "dsrf/core/error.hpp"

namespace dsrf {

std::string to_string(BayerPattern p) {
  switch (p) {
    case BayerPattern::RGGB: return "RGGB";
    case BayerPattern::BGGR: return "BGGR";
    case BayerPattern::GRBG: return "GRBG";
    case BayerPattern::GBRG: return "GBRG";
  }
  return "RGGB";
}

BayerPattern parse_bayer_pattern(const std::string& s) {
  if (s == "RGGB") return BayerPattern::RGGB;
  if (s == "BGGR") return BayerPattern::BGGR;
  if (s == "GRBG") return BayerPattern::GRBG;
  if (s == "GBRG") return BayerPattern::GBRG;
  throw InvalidInput("unknown Bayer pattern '" + s + "'");
}

Image pack_bayer(const BayerRaw& raw) {
  if (raw.height <= 0 || raw.width <= 0 || raw.height % 2 != 0 || raw.width % 2 != 0) {
    throw InvalidInput("pack_bayer: dimensions must be positive and even");
  }
  if (raw.data.size() != static_cast<std::size_t>(raw.height) * raw.width) {
    throw InvalidInput("pack_bayer: data length does not match dimensions");
  }
  const int h = raw.height / 2;
  const int w = raw.width / 2;
  Image out(4, h, w);
  constexpr float kScale = 1.0f / 65535.0f;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.at(0, y, x) = raw.at(2 * y, 2 * x) * kScale;
      out.at(1, y, x) = raw.at(2 * y, 2 * x + 1) * kScale;
      out.at(2, y, x) = raw.at(2 * y + 1, 2 * x) * kScale;
      out.at(3, y, x) = raw.at(2 * y + 1, 2 * x + 1) * kScale;
    }
  }
  return out;
}

BayerRaw unpack_bayer(const Image& packed, BayerPattern pattern, int black_level) {
  if (packed.channels() != 4) throw InvalidInput("unpack_bayer: expected 4 channels");
  BayerRaw raw;
  raw.height = packed.height() * 2;
  raw.width = packed.width() * 2;
  raw.pattern = pattern;
  raw.black_level = black_level;
  raw.data.resize(static_cast<std::size_t>(raw.height) * raw.width);
  auto put = [&](int y, int x, float v) {
    const double s = std::clamp(std::round(static_cast<double>(v) * 65535.0), 0.0, 65535.0);
    raw.data[static_cast<std::size_t>(y) * raw.width + x] = static_cast<std::uint16_t>(s);
  };
  for (int y = 0; y < packed.height(); ++y) {
    for (int x = 0; x < packed.width(); ++x) {
      put(2 * y, 2 * x, packed.at(0, y, x));
      put(2 * y, 2 * x + 1, packed.at(1, y, x));
      put(2 * y + 1, 2 * x, packed.at(2, y, x));
      put(2 * y + 1, 2 * x + 1, packed.at(3, y, x));
    }
  }
  return raw;
}

BayerRaw mosaic(const Image& rgb, BayerPattern pattern) {
  if (rgb.channels() != 3) throw InvalidInput("mosaic: expected RGB input");
  if (rgb.height() % 2 != 0 || rgb.width() % 2 != 0) {
    throw InvalidInput("mosaic: dimensions must be even");
  }
  // colour index (0=R, 1=G, 2=B) of the 2x2 block positions TL, TR, BL, BR
  std::array<int, 4> layout{};
  switch (pattern) {
    case BayerPattern::RGGB: layout = {0, 1, 1, 2}; break;
    case BayerPattern::BGGR: layout = {2, 1, 1, 0}; break;
    case BayerPattern::GRBG: layout = {1, 0, 2, 1}; break;
    case BayerPattern::GBRG: layout = {1, 2, 0, 1}; break;
  }
  BayerRaw raw;
  raw.height = rgb.height();
  raw.width = rgb.width();
  raw.pattern = pattern;
  raw.data.resize(static_cast<std::size_t>(raw.height) * raw.width);
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      const int c = layout[(y % 2) * 2 + (x % 2)];
      const double v = std::clamp(static_cast<double>(rgb.at(c, y, x)), 0.0, 1.0);
      raw.data[static_cast<std::size_t>(y) * raw.width + x] =
          static_cast<std::uint16_t>(std::round(v * 65535.0));
    }
  }
  return raw;
}

}  // namespace dsrf
