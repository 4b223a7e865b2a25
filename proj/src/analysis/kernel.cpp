#include "dsrf/analysis/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dsrf/analysis/fft.hpp"
#include "dsrf/core/error.hpp"
#include "dsrf/imgcore/color.hpp"
#include "dsrf/imgcore/resample.hpp"

namespace dsrf::analysis {

double BlurKernel::sum() const {
  double s = 0;
  for (double v : weights) s += v;
  return s;
}

double BlurKernel::second_moment() const {
  const int c = support / 2;
  double m = 0, s = 0;
  for (int y = 0; y < support; ++y) {
    for (int x = 0; x < support; ++x) {
      const double w = at(y, x);
      m += w * ((x - c) * (x - c) + (y - c) * (y - c));
      s += w;
    }
  }
  return s > 0 ? m / s : 0.0;
}

double BlurKernel::relative_l2(const BlurKernel& a, const BlurKernel& b) {
  if (a.support != b.support) throw InvalidInput("relative_l2: kernel sizes differ");
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.weights.size(); ++i) {
    num += (a.weights[i] - b.weights[i]) * (a.weights[i] - b.weights[i]);
    den += b.weights[i] * b.weights[i];
  }
  return std::sqrt(num / den);
}

std::string BlurKernel::to_csv() const {
  std::ostringstream os;
  os.precision(10);
  for (int y = 0; y < support; ++y) {
    for (int x = 0; x < support; ++x) os << (x ? "," : "") << at(y, x);
    os << "\n";
  }
  return os.str();
}

Image BlurKernel::to_image() const {
  Image img(1, support, support);
  const double peak = *std::max_element(weights.begin(), weights.end());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    img.data()[i] = peak > 0 ? static_cast<float>(std::max(0.0, weights[i] / peak)) : 0.0f;
  }
  return img;
}

namespace {

std::vector<double> windowed_luma(const Image& img, const std::vector<double>& wy, const std::vector<double>& wx) {
  const Image y = luminance(img);
  const int h = y.height(), w = y.width();
  double mean = 0;
  for (float v : y.data()) mean += v;
  mean /= static_cast<double>(y.size());
  std::vector<double> out(static_cast<std::size_t>(h) * w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) out[static_cast<std::size_t>(r) * w + c] = (y.at(0, r, c) - mean) * wy[r] * wx[c];
  }
  return out;
}

BlurKernel finalize(std::vector<double> k, int support) {
  BlurKernel out;
  out.support = support;
  const int big = static_cast<int>(std::sqrt(static_cast<double>(k.size())));
  const int c = big / 2;
  const int r = support / 2;
  for (double& v : k) v = std::max(v, 0.0);
  // Centroid of the support-sized window around the peak; mass far from the peak is
  // estimation noise.
  const auto peak = static_cast<int>(std::max_element(k.begin(), k.end()) - k.begin());
  const int py = std::clamp(peak / big, r, big - 1 - r);
  const int px = std::clamp(peak % big, r, big - 1 - r);
  double s = 0, mx = 0, my = 0;
  for (int y = py - r; y <= py + r; ++y) {
    for (int x = px - r; x <= px + r; ++x) {
      const double v = k[static_cast<std::size_t>(y) * big + x];
      s += v;
      mx += v * (x - c);
      my += v * (y - c);
    }
  }
  if (!(s > 0)) throw EstimationFailure("blur kernel estimate has no positive mass");
  out.raw_centroid_x = mx / s;
  out.raw_centroid_y = my / s;
  const int sx = std::clamp(static_cast<int>(std::lround(out.raw_centroid_x)), r - c, c - r);
  const int sy = std::clamp(static_cast<int>(std::lround(out.raw_centroid_y)), r - c, c - r);
  out.weights.assign(static_cast<std::size_t>(support) * support, 0.0);
  double t = 0;
  for (int y = 0; y < support; ++y) {
    for (int x = 0; x < support; ++x) {
      const double v = k[static_cast<std::size_t>(c + sy + y - r) * big + (c + sx + x - r)];
      out.weights[static_cast<std::size_t>(y) * support + x] = v;
      t += v;
    }
  }
  if (!(t > 0)) throw EstimationFailure("blur kernel estimate has no mass near its center");
  for (double& v : out.weights) v /= t;
  return out;
}

}  // namespace

BlurKernel estimate_blur_kernel(std::span<const KernelPair> pairs, const KernelOptions& opts) {
  if (pairs.empty()) throw InvalidInput("estimate_blur_kernel: no pairs");
  if (opts.support < 1 || opts.support % 2 == 0) throw InvalidInput("estimate_blur_kernel: support must be odd");
  if (!(opts.lambda > 0)) throw InvalidInput("estimate_blur_kernel: lambda must be positive");
  // crop with a margin so re-centering has room
  const int big = 2 * opts.support + 1;
  const int half = big / 2;
  std::vector<double> acc(static_cast<std::size_t>(big) * big, 0.0);
  for (const auto& p : pairs) {
    if (p.hr.empty() || p.lr.empty()) throw InvalidInput("estimate_blur_kernel: empty image");
    const int h = p.hr.height(), w = p.hr.width();
    if (h < big || w < big) throw InvalidInput("estimate_blur_kernel: image smaller than the kernel window");
    const Image lr = (p.lr.height() == h && p.lr.width() == w) ? p.lr : resize_bicubic(p.lr, h, w);
    const auto wy = hann(h);
    const auto wx = hann(w);
    const Spectrum H = fft2(windowed_luma(p.hr, wy, wx), h, w);
    const Spectrum L = fft2(windowed_luma(lr, wy, wx), h, w);
    double mean_power = 0;
    for (const auto& v : H) mean_power += std::norm(v);
    mean_power /= static_cast<double>(H.size());
    const double reg = opts.lambda * mean_power;
    Spectrum K(H.size());
    for (std::size_t i = 0; i < H.size(); ++i) K[i] = std::conj(H[i]) * L[i] / (std::norm(H[i]) + reg);
    const auto k = fftshift(ifft2_real(K, h, w), h, w);
    const int cy = h / 2, cx = w / 2;
    for (int y = 0; y < big; ++y) {
      for (int x = 0; x < big; ++x) {
        acc[static_cast<std::size_t>(y) * big + x] += k[static_cast<std::size_t>(cy + y - half) * w + (cx + x - half)];
      }
    }
  }
  for (double& v : acc) v /= static_cast<double>(pairs.size());
  return finalize(std::move(acc), opts.support);
}

BlurKernel bicubic_reference_kernel(double scale, int support) {
  if (!(scale > 0)) throw InvalidInput("bicubic_reference_kernel: scale must be positive");
  if (support < 1 || support % 2 == 0) throw InvalidInput("bicubic_reference_kernel: support must be odd");
  const int r = support / 2;
  std::vector<double> k1(support);
  for (int i = 0; i < support; ++i) k1[i] = ResampleKernel::cubic((i - r) / scale) / scale;
  BlurKernel out;
  out.support = support;
  out.weights.resize(static_cast<std::size_t>(support) * support);
  double s = 0;
  for (int y = 0; y < support; ++y) {
    for (int x = 0; x < support; ++x) s += (out.weights[static_cast<std::size_t>(y) * support + x] = k1[y] * k1[x]);
  }
  for (double& v : out.weights) v /= s;
  return out;
}

BlurKernel gaussian_reference_kernel(double sigma, int support) {
  if (!(sigma > 0)) throw InvalidInput("gaussian_reference_kernel: sigma must be positive");
  if (support < 1 || support % 2 == 0) throw InvalidInput("gaussian_reference_kernel: support must be odd");
  const int r = support / 2;
  BlurKernel out;
  out.support = support;
  out.weights.resize(static_cast<std::size_t>(support) * support);
  double s = 0;
  for (int y = 0; y < support; ++y) {
    for (int x = 0; x < support; ++x) {
      const double v = std::exp(-0.5 * ((x - r) * (x - r) + (y - r) * (y - r)) / (sigma * sigma));
      out.weights[static_cast<std::size_t>(y) * support + x] = v;
      s += v;
    }
  }
  for (double& v : out.weights) v /= s;
  return out;
}

}  // namespace dsrf::analysis
