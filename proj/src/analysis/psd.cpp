#include "dsrf/analysis/psd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dsrf/analysis/fft.hpp"
#include "dsrf/core/error.hpp"
#include "dsrf/imgcore/color.hpp"
#include "dsrf/imgcore/resample.hpp"

namespace dsrf::analysis {

double RadialPSD::flatness_ratio(int skip) const {
  double lo = 1e300, hi = 0;
  for (std::size_t i = static_cast<std::size_t>(skip); i < log_power.size(); ++i) {
    const double p = std::pow(10.0, log_power[i]);
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  return lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
}

std::string RadialPSD::to_csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "frequency,log10_power\n";
  for (std::size_t i = 0; i < frequency.size(); ++i) os << frequency[i] << "," << log_power[i] << "\n";
  return os.str();
}

double altitude_crop_fraction(int reference_altitude, int altitude) {
  if (reference_altitude <= 0 || altitude <= 0) throw InvalidInput("altitudes must be positive");
  return std::min(1.0, static_cast<double>(reference_altitude) / altitude);
}

RadialPSD radial_psd(const std::vector<Image>& images, const PsdOptions& opts) {
  if (images.empty()) throw InvalidInput("radial_psd: no images");
  if (!(opts.crop_fraction > 0.0 && opts.crop_fraction <= 1.0)) throw InvalidInput("radial_psd: crop fraction must lie in (0, 1]");
  if (opts.tile < 8 || opts.bins < 2) throw InvalidInput("radial_psd: tile or bin count too small");
  const int n = opts.tile;
  RadialPSD out;
  out.frequency.resize(opts.bins);
  const double bw = 0.5 / opts.bins;
  for (int b = 0; b < opts.bins; ++b) out.frequency[b] = (b + 0.5) * bw;
  std::vector<double> acc(opts.bins, 0.0);

  const auto win = hann(n);
  // bin index of every shifted frequency sample (or -1 beyond Nyquist radius)
  std::vector<int> bin_of(static_cast<std::size_t>(n) * n);
  std::vector<int> bin_count(opts.bins, 0);
  for (int y = 0; y < n; ++y) {
    const double fy = static_cast<double>(y <= n / 2 ? y : y - n) / n;
    for (int x = 0; x < n; ++x) {
      const double fx = static_cast<double>(x <= n / 2 ? x : x - n) / n;
      const double r = std::hypot(fx, fy);
      int b = -1;
      if (r <= 0.5) b = std::min(static_cast<int>(r / bw), opts.bins - 1);
      bin_of[static_cast<std::size_t>(y) * n + x] = b;
      if (b >= 0) ++bin_count[b];
    }
  }

  for (const auto& img : images) {
    if (img.empty()) throw InvalidInput("radial_psd: empty image");
    Image y = luminance(img);
    const int cw = std::max(1, static_cast<int>(std::lround(y.width() * opts.crop_fraction)));
    const int ch = std::max(1, static_cast<int>(std::lround(y.height() * opts.crop_fraction)));
    y = crop(y, {(y.width() - cw) / 2, (y.height() - ch) / 2, cw, ch});
    if (cw < n || ch < n) {
      const double s = static_cast<double>(n) / std::min(cw, ch);
      const int nw = std::max(n, static_cast<int>(std::ceil(cw * s)));
      const int nh = std::max(n, static_cast<int>(std::ceil(ch * s)));
      std::ostringstream note;
      note << "image " << out.image_count << ": " << cw << "x" << ch << " crop resized to " << nw << "x" << nh;
      out.notes.push_back(note.str());
      y = resize_bicubic(y, nh, nw);
    }
    y = crop(y, {(y.width() - n) / 2, (y.height() - n) / 2, n, n});
    std::vector<double> v(static_cast<std::size_t>(n) * n);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) v[static_cast<std::size_t>(r) * n + c] = y.at(0, r, c) * win[r] * win[c];
    }
    const Spectrum f = fft2(v, n, n);
    std::vector<double> power(opts.bins, 0.0);
    const double norm = static_cast<double>(n) * n;
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (bin_of[i] >= 0) power[bin_of[i]] += std::norm(f[i]) / norm;
    }
    for (int b = 0; b < opts.bins; ++b) {
      const double mean = bin_count[b] > 0 ? power[b] / bin_count[b] : 0.0;
      acc[b] += std::log10(std::max(mean, kPowerFloor));
    }
    ++out.image_count;
  }
  out.log_power.resize(opts.bins);
  for (int b = 0; b < opts.bins; ++b) out.log_power[b] = acc[b] / out.image_count;
  return out;
}

}  // namespace dsrf::analysis
