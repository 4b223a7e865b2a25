#include "dsrf/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dsrf/core/error.hpp"
#include "dsrf/imgcore/color.hpp"

namespace dsrf::metrics {

namespace {

void check_pair(const Image& pred, const Image& ref) {
  if (!pred.same_shape(ref)) throw InvalidInput("metrics: images must have identical shapes");
  if (pred.empty()) throw InvalidInput("metrics: empty image");
  if (pred.channels() != 1 && pred.channels() != 3) throw InvalidInput("metrics: expected 1 or 3 channels");
}

// Gaussian-weighted 'valid' filtering with an 11-tap separable window.
std::vector<double> filter_valid(const std::vector<double>& in, int h, int w, const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  const int oh = h - n + 1;
  const int ow = w - n + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0;
      for (int t = 0; t < n; ++t) s += k[t] * in[static_cast<std::size_t>(y) * w + x + t];
      tmp[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0;
      for (int t = 0; t < n; ++t) s += k[t] * tmp[static_cast<std::size_t>(y + t) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  return out;
}

}  // namespace

std::vector<double> eval_luma(const Image& img, const EvalOptions& opts, int& out_h, int& out_w) {
  if (opts.shave < 0) throw InvalidInput("metrics: shave must be non-negative");
  const int h = img.height() - 2 * opts.shave;
  const int w = img.width() - 2 * opts.shave;
  if (h <= 0 || w <= 0) throw InvalidInput("metrics: border shave removes the whole image");
  Image src = img;
  if (opts.quantize_8bit) {
    for (float& v : src.data()) v = static_cast<float>(std::round(std::clamp(v, 0.0f, 1.0f) * 255.0) / 255.0);
  }
  const Image y = luminance(src);
  std::vector<double> out(static_cast<std::size_t>(h) * w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double v = static_cast<double>(y.at(0, r + opts.shave, c + opts.shave)) * 255.0;
      if (opts.quantize_8bit) v = std::round(v);
      out[static_cast<std::size_t>(r) * w + c] = v;
    }
  }
  out_h = h;
  out_w = w;
  return out;
}

PsnrResult psnr_y(const Image& pred, const Image& ref, const EvalOptions& opts) {
  check_pair(pred, ref);
  int h = 0, w = 0;
  const auto a = eval_luma(pred, opts, h, w);
  const auto b = eval_luma(ref, opts, h, w);
  double sse = 0;
  for (std::size_t i = 0; i < a.size(); ++i) sse += (a[i] - b[i]) * (a[i] - b[i]);
  PsnrResult r;
  r.mse = sse / static_cast<double>(a.size());
  if (r.mse == 0.0) {
    r.exact_match = true;
    r.db = kPsnrCap;
  } else {
    r.db = std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / r.mse));
  }
  return r;
}

double ssim_y(const Image& pred, const Image& ref, const EvalOptions& opts) {
  check_pair(pred, ref);
  int h = 0, w = 0;
  const auto a = eval_luma(pred, opts, h, w);
  const auto b = eval_luma(ref, opts, h, w);
  if (h < 11 || w < 11) throw InvalidInput("ssim: image must be at least 11x11 after shaving");
  std::vector<double> k(11);
  double ks = 0;
  for (int i = 0; i < 11; ++i) {
    k[i] = std::exp(-0.5 * (i - 5) * (i - 5) / (1.5 * 1.5));
    ks += k[i];
  }
  for (double& v : k) v /= ks;
  std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto mu_a = filter_valid(a, h, w, k);
  const auto mu_b = filter_valid(b, h, w, k);
  const auto s_aa = filter_valid(aa, h, w, k);
  const auto s_bb = filter_valid(bb, h, w, k);
  const auto s_ab = filter_valid(ab, h, w, k);
  const double c1 = (0.01 * 255) * (0.01 * 255);
  const double c2 = (0.03 * 255) * (0.03 * 255);
  double sum = 0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = s_aa[i] - ma * ma;
    const double vb = s_bb[i] - mb * mb;
    const double cov = s_ab[i] - ma * mb;
    sum += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return sum / static_cast<double>(mu_a.size());
}

double ncc(const Image& a, const Image& b) {
  if (a.channels() != 1 || b.channels() != 1) throw InvalidInput("ncc: expected single-channel images");
  if (!a.same_shape(b) || a.empty()) throw InvalidInput("ncc: images must have identical non-empty shapes");
  const auto x = a.data();
  const auto y = b.data();
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 1e-20 * n) || !(syy > 1e-20 * n)) throw UndefinedCorrelation("ncc: zero variance input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace dsrf::metrics
