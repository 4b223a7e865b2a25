#include "dsrf/analysis/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

#include "dsrf/core/error.hpp"

namespace dsrf::analysis {

namespace {

// FFTW planning is not thread-safe.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

Spectrum run(const Spectrum& in, int h, int w, int sign) {
  if (h <= 0 || w <= 0 || in.size() != static_cast<std::size_t>(h) * w) {
    throw InvalidInput("fft: size mismatch");
  }
  Spectrum buf(in);
  Spectrum out(in.size());
  auto* ip = reinterpret_cast<fftw_complex*>(buf.data());
  auto* op = reinterpret_cast<fftw_complex*>(out.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    plan = fftw_plan_dft_2d(h, w, ip, op, sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

}  // namespace

Spectrum fft2(const std::vector<double>& in, int h, int w) {
  Spectrum c(in.begin(), in.end());
  return run(c, h, w, FFTW_FORWARD);
}

std::vector<double> ifft2_real(const Spectrum& in, int h, int w) {
  const Spectrum c = run(in, h, w, FFTW_BACKWARD);
  std::vector<double> out(c.size());
  const double s = 1.0 / (static_cast<double>(h) * w);
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real() * s;
  return out;
}

std::vector<double> fftshift(const std::vector<double>& in, int h, int w) {
  std::vector<double> out(in.size());
  for (int y = 0; y < h; ++y) {
    const int ty = (y + h / 2) % h;
    for (int x = 0; x < w; ++x) {
      out[static_cast<std::size_t>(ty) * w + (x + w / 2) % w] = in[static_cast<std::size_t>(y) * w + x];
    }
  }
  return out;
}

std::vector<double> hann(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

}  // namespace dsrf::analysis
