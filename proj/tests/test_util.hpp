#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "dsrf/imgcore/image.hpp"
#include "dsrf/imgcore/filter.hpp"

namespace dsrf::test {

inline Image noise_image(int c, int h, int w, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Image img(c, h, w);
  for (float& v : img.data()) v = static_cast<float>(u(rng));
  return img;
}

/// Band-limited texture: a few low-frequency sinusoids per channel, values in [0.1, 0.9].
inline Image smooth_image(int c, int h, int w, std::uint64_t seed, double max_cycles = 3.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(c, h, w);
  for (int ch = 0; ch < c; ++ch) {
    double fx[4], fy[4], ph[4];
    for (int k = 0; k < 4; ++k) {
      fx[k] = (u(rng) * 2 - 1) * max_cycles / w;
      fy[k] = (u(rng) * 2 - 1) * max_cycles / h;
      ph[k] = u(rng) * 6.283185307179586;
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double v = 0.0;
        for (int k = 0; k < 4; ++k) v += std::sin(6.283185307179586 * (fx[k] * x + fy[k] * y) + ph[k]);
        img.at(ch, y, x) = static_cast<float>(0.5 + 0.1 * v);
      }
    }
  }
  return img;
}

/// Blurred noise: rich texture for feature detection and registration.
inline Image texture_image(int c, int h, int w, std::uint64_t seed, double sigma = 1.5) {
  Image img = gaussian_blur(noise_image(c, h, w, seed), sigma);
  double lo = 1e9, hi = -1e9;
  for (float v : img.data()) {
    lo = std::min(lo, static_cast<double>(v));
    hi = std::max(hi, static_cast<double>(v));
  }
  for (float& v : img.data()) v = static_cast<float>(0.05 + 0.9 * (v - lo) / (hi - lo));
  return img;
}

inline double max_abs_diff(const Image& a, const Image& b) {
  double m = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) m = std::max(m, std::abs(static_cast<double>(da[i]) - db[i]));
  return m;
}

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("dsrf_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace dsrf::test
