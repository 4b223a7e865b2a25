#include "dsrf/imgcore/filter.hpp"

#include <algorithm>
#include <cmath>

#include "dsrf/core/error.hpp"

namespace dsrf {

std::vector<double> gaussian_kernel(double sigma, double truncate) {
  if (!(sigma > 0.0)) throw InvalidInput("gaussian_kernel: sigma must be positive");
  const int radius = std::max(1, static_cast<int>(std::ceil(truncate * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

Image filter_separable(const Image& img, std::span<const double> kx, std::span<const double> ky) {
  if (kx.size() % 2 == 0 || ky.size() % 2 == 0) {
    throw InvalidInput("filter_separable: kernels must have odd length");
  }
  const int rx = static_cast<int>(kx.size() / 2);
  const int ry = static_cast<int>(ky.size() / 2);
  const int h = img.height();
  const int w = img.width();
  Image out(img.channels(), h, w);
  std::vector<double> tmp(static_cast<std::size_t>(h) * w);
  std::vector<double> row(w + 2 * rx);
  std::vector<int> yidx(h + 2 * ry);
  for (int i = 0; i < h + 2 * ry; ++i) yidx[i] = reflect_index(i - ry, h);
  for (int c = 0; c < img.channels(); ++c) {
    auto src = img.plane(c);
    for (int y = 0; y < h; ++y) {
      for (int i = 0; i < w + 2 * rx; ++i) row[i] = src[y * w + reflect_index(i - rx, w)];
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (std::size_t k = 0; k < kx.size(); ++k) acc += kx[k] * row[x + k];
        tmp[static_cast<std::size_t>(y) * w + x] = acc;
      }
    }
    auto dst = out.plane(c);
    std::vector<double> acc(w);
    for (int y = 0; y < h; ++y) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t k = 0; k < ky.size(); ++k) {
        const double kv = ky[k];
        const double* r = tmp.data() + static_cast<std::size_t>(yidx[y + k]) * w;
        for (int x = 0; x < w; ++x) acc[x] += kv * r[x];
      }
      for (int x = 0; x < w; ++x) dst[static_cast<std::size_t>(y) * w + x] = static_cast<float>(acc[x]);
    }
  }
  return out;
}

Image gaussian_blur(const Image& img, double sigma) {
  if (sigma <= 0.0) return img;
  const auto k = gaussian_kernel(sigma);
  return filter_separable(img, k, k);
}

void sobel(const Image& gray, Image& gx, Image& gy) {
  if (gray.channels() != 1) throw InvalidInput("sobel: expected single-channel image");
  const int h = gray.height();
  const int w = gray.width();
  gx = Image(1, h, w);
  gy = Image(1, h, w);
  auto px = [&](int y, int x) {
    return static_cast<double>(gray.at(0, std::clamp(y, 0, h - 1), std::clamp(x, 0, w - 1)));
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = (px(y - 1, x + 1) + 2 * px(y, x + 1) + px(y + 1, x + 1)) -
                        (px(y - 1, x - 1) + 2 * px(y, x - 1) + px(y + 1, x - 1));
      const double dy = (px(y + 1, x - 1) + 2 * px(y + 1, x) + px(y + 1, x + 1)) -
                        (px(y - 1, x - 1) + 2 * px(y - 1, x) + px(y - 1, x + 1));
      gx.at(0, y, x) = static_cast<float>(dx / 8.0);
      gy.at(0, y, x) = static_cast<float>(dy / 8.0);
    }
  }
}

Image sobel_magnitude(const Image& gray) {
  Image gx, gy;
  sobel(gray, gx, gy);
  Image out(1, gray.height(), gray.width());
  auto a = gx.data();
  auto b = gy.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::hypot(a[i], b[i]);
  return out;
}

}  // namespace dsrf
