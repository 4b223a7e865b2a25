#include "dsrf/imgcore/color.hpp"

#include "dsrf/core/error.hpp"

namespace dsrf {

Image rgb_to_y(const Image& rgb) {
  if (rgb.channels() != 3) throw InvalidInput("rgb_to_y expects a 3-channel image");
  Image out(1, rgb.height(), rgb.width());
  auto r = rgb.plane(0);
  auto g = rgb.plane(1);
  auto b = rgb.plane(2);
  auto y = out.plane(0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double v = (65.481 * r[i] + 128.553 * g[i] + 24.966 * b[i] + 16.0) / 255.0;
    y[i] = static_cast<float>(v);
  }
  return out;
}

Image luminance(const Image& img) {
  if (img.channels() == 1) return img;
  return rgb_to_y(img);
}

}  // namespace dsrf
