#include "dsrf/registration/error_map.hpp"

#include <algorithm>
#include <cmath>

#include "dsrf/imgcore/color.hpp"
#include "dsrf/imgcore/filter.hpp"
#include "dsrf/imgcore/resample.hpp"

namespace dsrf::registration {

namespace {

std::vector<std::uint8_t> dilate(const std::vector<std::uint8_t>& m, int h, int w, int r) {
  // separable square dilation
  std::vector<std::uint8_t> tmp(m.size(), 0), out(m.size(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!m[static_cast<std::size_t>(y) * w + x]) continue;
      for (int dx = std::max(0, x - r); dx <= std::min(w - 1, x + r); ++dx) tmp[static_cast<std::size_t>(y) * w + dx] = 1;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!tmp[static_cast<std::size_t>(y) * w + x]) continue;
      for (int dy = std::max(0, y - r); dy <= std::min(h - 1, y + r); ++dy) out[static_cast<std::size_t>(dy) * w + x] = 1;
    }
  }
  return out;
}

}  // namespace

ErrorMapReport error_map(const Image& hr, const Image& upsampled_lr, const ErrorMapOptions& opts) {
  if (!hr.same_shape(upsampled_lr) || hr.empty()) throw InvalidInput("error_map: images must have the same shape");
  const int h = hr.height();
  const int w = hr.width();
  ErrorMapReport rep;
  rep.map = Image(1, h, w);
  double total = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0;
      for (int c = 0; c < hr.channels(); ++c) s += std::abs(static_cast<double>(hr.at(c, y, x)) - upsampled_lr.at(c, y, x));
      s /= hr.channels();
      rep.map.at(0, y, x) = static_cast<float>(s);
      total += s;
    }
  }
  rep.summary.mean_error = total / (static_cast<double>(h) * w);

  const Image hy = luminance(hr);
  const Image ly = luminance(upsampled_lr);
  const Image mag = sobel_magnitude(hy);
  const float peak = *std::max_element(mag.data().begin(), mag.data().end());
  std::vector<std::uint8_t> edges(mag.size(), 0);
  if (peak > 0) {
    for (std::size_t i = 0; i < edges.size(); ++i) edges[i] = mag.data()[i] >= opts.edge_fraction * peak;
  }
  const auto near = dilate(edges, h, w, opts.edge_radius);
  double edge_mass = 0;
  for (std::size_t i = 0; i < near.size(); ++i) {
    if (near[i]) edge_mass += rep.map.data()[i];
  }
  rep.summary.edge_concentration = total > 0 ? edge_mass / total : 0.0;

  // Linearized shift: ly(x) ~ hy(x - d)  =>  ly - hy ~ -grad . d
  const Image hs = gaussian_blur(hy, opts.shift_sigma);
  const Image ls = gaussian_blur(ly, opts.shift_sigma);
  Image mean(1, h, w);
  for (std::size_t i = 0; i < mean.size(); ++i) mean.data()[i] = 0.5f * (hs.data()[i] + ls.data()[i]);
  Image gx, gy;
  sobel(mean, gx, gy);
  double a = 0, b = 0, c = 0, bx = 0, by = 0;
  for (std::size_t i = 0; i < near.size(); ++i) {
    if (!near[i]) continue;
    const double u = gx.data()[i];
    const double v = gy.data()[i];
    const double d = static_cast<double>(ls.data()[i]) - hs.data()[i];
    a += u * u;
    b += u * v;
    c += v * v;
    bx += u * d;
    by += v * d;
  }
  const double det = a * c - b * b;
  if (det > 1e-12 * (a + c) * (a + c) && det > 0) {
    rep.summary.shift_x = -(c * bx - b * by) / det;
    rep.summary.shift_y = -(a * by - b * bx) / det;
  }
  rep.summary.misaligned = std::hypot(rep.summary.shift_x, rep.summary.shift_y) > opts.misalignment_px;
  return rep;
}

ErrorMapReport error_map_report(const PatchPair& pp, const ErrorMapOptions& opts) {
  const Image up = resize_bicubic(pp.lr_patch, pp.hr_patch.height(), pp.hr_patch.width());
  return error_map(pp.hr_patch, up, opts);
}

}  // namespace dsrf::registration
