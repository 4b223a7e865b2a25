#include "dsrf/colorcorr/colorcorr.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "dsrf/core/error.hpp"
#include "dsrf/imgcore/filter.hpp"

namespace dsrf::colorcorr {

namespace {

int bin_of(float v) {
  const double c = std::clamp(static_cast<double>(v), 0.0, 1.0);
  return std::min(static_cast<int>(c * kHistogramBins), kHistogramBins - 1);
}

std::vector<double> histogram(std::span<const float> values) {
  std::vector<double> h(kHistogramBins, 0.0);
  for (float v : values) h[bin_of(v)] += 1.0;
  return h;
}

}  // namespace

Image histogram_match(const Image& src, const Image& ref) {
  if (src.channels() != ref.channels()) throw InvalidInput("histogram_match: channel count mismatch");
  if (src.empty() || ref.empty()) throw InvalidInput("histogram_match: empty image");
  Image out(src.channels(), src.height(), src.width());
  for (int c = 0; c < src.channels(); ++c) {
    const auto hs = histogram(src.plane(c));
    const auto hr = histogram(ref.plane(c));
    const double ns = static_cast<double>(src.pixels());
    const double nr = static_cast<double>(ref.pixels());
    std::vector<double> cum_ref(kHistogramBins + 1, 0.0);
    for (int b = 0; b < kHistogramBins; ++b) cum_ref[b + 1] = cum_ref[b] + hr[b];

    // Output value for each populated src bin.
    std::array<float, kHistogramBins> lut{};
    double below = 0.0;
    for (int b = 0; b < kHistogramBins; ++b) {
      if (hs[b] > 0.0) {
        const double target = (below + 0.5 * hs[b]) / ns * nr;
        // first ref bin k with cum_ref[k] < target <= cum_ref[k+1]
        const auto it = std::lower_bound(cum_ref.begin() + 1, cum_ref.end(), target);
        const int k = std::min(static_cast<int>(it - cum_ref.begin()) - 1, kHistogramBins - 1);
        const double frac = hr[k] > 0.0 ? (target - cum_ref[k]) / hr[k] : 0.5;
        lut[b] = static_cast<float>(std::clamp((k + frac) / kHistogramBins, 0.0, 1.0));
      }
      below += hs[b];
    }
    const auto in = src.plane(c);
    auto dst = out.plane(c);
    for (std::size_t i = 0; i < in.size(); ++i) dst[i] = lut[bin_of(in[i])];
  }
  return out;
}

Image color_transfer(const Image& src, const Image& ref, double blur_sigma) {
  if (!src.same_shape(ref)) throw InvalidInput("color_transfer: src and ref must have the same shape");
  if (src.empty()) throw InvalidInput("color_transfer: empty image");
  const Image gs = gaussian_blur(src, blur_sigma);
  const Image gr = gaussian_blur(ref, blur_sigma);
  Image out(src.channels(), src.height(), src.width());
  const auto s = src.data();
  const auto a = gs.data();
  const auto b = gr.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) {
    const double gain = std::clamp((b[i] + kTransferEpsilon) / (a[i] + kTransferEpsilon), 0.5, 2.0);
    o[i] = static_cast<float>(std::clamp(s[i] * gain, 0.0, 1.0));
  }
  return out;
}

}  // namespace dsrf::colorcorr
