#include "dsrf/imgcore/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dsrf/core/error.hpp"

namespace dsrf {

Image::Image(int channels, int height, int width, float fill)
    : channels_(channels), height_(height), width_(width) {
  if (channels <= 0 || height <= 0 || width <= 0) {
    throw InvalidInput("image dimensions must be positive, got " + std::to_string(channels) +
                       "x" + std::to_string(height) + "x" + std::to_string(width));
  }
  data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

Image Image::channel(int c) const {
  if (c < 0 || c >= channels_) throw InvalidInput("channel index out of range");
  Image out(1, height_, width_);
  auto src = plane(c);
  std::copy(src.begin(), src.end(), out.data().begin());
  return out;
}

void Image::clamp01() {
  for (float& v : data_) v = std::clamp(v, 0.0f, 1.0f);
}

bool Image::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

Image crop(const Image& img, const Rect& rect) {
  if (rect.width <= 0 || rect.height <= 0 || rect.x < 0 || rect.y < 0 ||
      rect.x + rect.width > img.width() || rect.y + rect.height > img.height()) {
    throw InvalidInput("crop rectangle outside image bounds");
  }
  Image out(img.channels(), rect.height, rect.width);
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < rect.height; ++y) {
      for (int x = 0; x < rect.width; ++x) {
        out.at(c, y, x) = img.at(c, rect.y + y, rect.x + x);
      }
    }
  }
  return out;
}

Image pad(const Image& img, const Margins& m, PadMode mode) {
  if (m.top < 0 || m.bottom < 0 || m.left < 0 || m.right < 0) {
    throw InvalidInput("pad margins must be non-negative");
  }
  const int h = img.height() + m.top + m.bottom;
  const int w = img.width() + m.left + m.right;
  Image out(img.channels(), h, w);
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      int sy = y - m.top;
      const bool y_in = sy >= 0 && sy < img.height();
      if (!y_in) {
        sy = mode == PadMode::symmetric ? reflect_index(sy, img.height())
                                        : std::clamp(sy, 0, img.height() - 1);
      }
      for (int x = 0; x < w; ++x) {
        int sx = x - m.left;
        const bool x_in = sx >= 0 && sx < img.width();
        if (!x_in) {
          sx = mode == PadMode::symmetric ? reflect_index(sx, img.width())
                                          : std::clamp(sx, 0, img.width() - 1);
        }
        out.at(c, y, x) = (mode == PadMode::zero && !(x_in && y_in)) ? 0.0f : img.at(c, sy, sx);
      }
    }
  }
  return out;
}

}  // namespace dsrf
