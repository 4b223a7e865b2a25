#include "dsrf/geometry/warp.hpp"

#include <algorithm>
#include <cmath>

#include "dsrf/core/error.hpp"

namespace dsrf::geometry {

double sample_bilinear(const Image& img, int c, double x, double y) {
  const double u = x - 0.5;
  const double v = y - 0.5;
  const int x0 = static_cast<int>(std::floor(u));
  const int y0 = static_cast<int>(std::floor(v));
  const double fx = u - x0;
  const double fy = v - y0;
  const int w = img.width();
  const int h = img.height();
  const int xa = std::clamp(x0, 0, w - 1);
  const int xb = std::clamp(x0 + 1, 0, w - 1);
  const int ya = std::clamp(y0, 0, h - 1);
  const int yb = std::clamp(y0 + 1, 0, h - 1);
  const double top = (1.0 - fx) * img.at(c, ya, xa) + fx * img.at(c, ya, xb);
  const double bot = (1.0 - fx) * img.at(c, yb, xa) + fx * img.at(c, yb, xb);
  return (1.0 - fy) * top + fy * bot;
}

WarpResult warp_image(const Image& img, const Homography& h, int out_h, int out_w) {
  if (!h.invertible()) throw InvalidInput("warp_image: homography is not invertible");
  if (img.empty()) throw InvalidInput("warp_image: empty source");
  if (out_h <= 0 || out_w <= 0) throw InvalidInput("warp_image: output size must be positive");
  const Homography inv = h.inverse();
  const auto& m = inv.matrix();
  WarpResult res{Image(img.channels(), out_h, out_w), Image(1, out_h, out_w), 0.0};
  const double W = img.width();
  const double H = img.height();
  std::size_t covered = 0;
  for (int y = 0; y < out_h; ++y) {
    const double py = y + 0.5;
    for (int x = 0; x < out_w; ++x) {
      const double px = x + 0.5;
      const double w = m[6] * px + m[7] * py + m[8];
      if (std::abs(w) < 1e-12) continue;
      const double sx = (m[0] * px + m[1] * py + m[2]) / w;
      const double sy = (m[3] * px + m[4] * py + m[5]) / w;
      if (!(sx >= 0.0 && sx <= W && sy >= 0.0 && sy <= H)) continue;
      ++covered;
      res.mask.at(0, y, x) = 1.0f;
      for (int c = 0; c < img.channels(); ++c) {
        res.image.at(c, y, x) = static_cast<float>(sample_bilinear(img, c, sx, sy));
      }
    }
  }
  res.coverage = static_cast<double>(covered) / (static_cast<double>(out_h) * out_w);
  return res;
}

}  // namespace dsrf::geometry
