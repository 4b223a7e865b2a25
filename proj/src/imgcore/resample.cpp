#include "dsrf/imgcore/resample.hpp"

#include <algorithm>
#include <cmath>

#include "dsrf/core/error.hpp"

namespace dsrf {

double ResampleKernel::cubic(double x) {
  const double ax = std::abs(x);
  const double ax2 = ax * ax;
  const double ax3 = ax2 * ax;
  if (ax <= 1.0) return 1.5 * ax3 - 2.5 * ax2 + 1.0;
  if (ax <= 2.0) return -0.5 * ax3 + 2.5 * ax2 - 4.0 * ax + 2.0;
  return 0.0;
}

double ResampleKernel::width(double scale) const {
  return (antialias && scale < 1.0) ? support / scale : support;
}

double ResampleKernel::weight(double x, double scale) const {
  if (antialias && scale < 1.0) return scale * cubic(scale * x);
  return cubic(x);
}

AxisWeights axis_weights(int in_len, int out_len, double in_per_out, double offset,
                         const ResampleKernel& kernel) {
  if (in_len <= 0 || out_len <= 0) throw InvalidInput("axis lengths must be positive");
  if (!(in_per_out > 0.0)) throw InvalidInput("resampling step must be positive");
  const double scale = 1.0 / in_per_out;
  const double kw = kernel.width(scale);
  AxisWeights aw;
  aw.in_len = in_len;
  aw.out_len = out_len;
  aw.taps = static_cast<int>(std::ceil(kw)) + 2;
  aw.index.resize(static_cast<std::size_t>(out_len) * aw.taps);
  aw.weight.resize(aw.index.size());
  for (int j = 0; j < out_len; ++j) {
    const double center = (j + 0.5) * in_per_out + offset - 0.5;
    const int left = static_cast<int>(std::floor(center - kw / 2.0));
    double sum = 0.0;
    for (int k = 0; k < aw.taps; ++k) {
      const double w = kernel.weight(center - (left + k), scale);
      aw.weight[j * aw.taps + k] = w;
      aw.index[j * aw.taps + k] = reflect_index(left + k, in_len);
      sum += w;
    }
    for (int k = 0; k < aw.taps; ++k) aw.weight[j * aw.taps + k] /= sum;
  }
  return aw;
}

AxisWeights resize_weights(int in_len, int out_len, const ResampleKernel& kernel) {
  return axis_weights(in_len, out_len, static_cast<double>(in_len) / out_len, 0.0, kernel);
}

namespace {

// Planar double buffer used between the two separable passes.
struct Buffer {
  int channels, height, width;
  std::vector<double> v;
  double& at(int c, int y, int x) { return v[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  double at(int c, int y, int x) const {
    return v[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
};

Buffer to_buffer(const Image& img) {
  Buffer b{img.channels(), img.height(), img.width(), {}};
  b.v.assign(img.data().begin(), img.data().end());
  return b;
}

Buffer apply_rows(const Buffer& in, const AxisWeights& aw) {
  Buffer out{in.channels, in.height, aw.out_len, {}};
  out.v.assign(static_cast<std::size_t>(out.channels) * out.height * out.width, 0.0);
  for (int c = 0; c < in.channels; ++c) {
    for (int y = 0; y < in.height; ++y) {
      for (int j = 0; j < aw.out_len; ++j) {
        double acc = 0.0;
        for (int k = 0; k < aw.taps; ++k) {
          acc += aw.weight[j * aw.taps + k] * in.at(c, y, aw.index[j * aw.taps + k]);
        }
        out.at(c, y, j) = acc;
      }
    }
  }
  return out;
}

Buffer apply_cols(const Buffer& in, const AxisWeights& aw) {
  Buffer out{in.channels, aw.out_len, in.width, {}};
  out.v.assign(static_cast<std::size_t>(out.channels) * out.height * out.width, 0.0);
  for (int c = 0; c < in.channels; ++c) {
    for (int j = 0; j < aw.out_len; ++j) {
      for (int k = 0; k < aw.taps; ++k) {
        const double w = aw.weight[j * aw.taps + k];
        if (w == 0.0) continue;
        const int src = aw.index[j * aw.taps + k];
        for (int x = 0; x < in.width; ++x) out.at(c, j, x) += w * in.at(c, src, x);
      }
    }
  }
  return out;
}

Image separable(const Image& img, const AxisWeights& rows_w, const AxisWeights& cols_w,
                bool cols_first) {
  Buffer b = to_buffer(img);
  if (cols_first) {
    b = apply_cols(b, cols_w);
    b = apply_rows(b, rows_w);
  } else {
    b = apply_rows(b, rows_w);
    b = apply_cols(b, cols_w);
  }
  Image out(b.channels, b.height, b.width);
  auto d = out.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = static_cast<float>(std::clamp(b.v[i], 0.0, 1.0));
  }
  return out;
}

}  // namespace

Image resize_bicubic(const Image& img, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw InvalidInput("resize_bicubic: output size must be >= 1");
  if (img.empty()) throw InvalidInput("resize_bicubic: empty image");
  if (out_h == img.height() && out_w == img.width()) return img;
  const double scale_y = static_cast<double>(out_h) / img.height();
  const double scale_x = static_cast<double>(out_w) / img.width();
  return separable(img, resize_weights(img.width(), out_w), resize_weights(img.height(), out_h),
                   scale_y < scale_x);
}

Image resample_bicubic(const Image& img, int out_h, int out_w, double sy, double oy, double sx,
                       double ox) {
  if (out_h < 1 || out_w < 1) throw InvalidInput("resample_bicubic: output size must be >= 1");
  if (img.empty()) throw InvalidInput("resample_bicubic: empty image");
  const auto rows_w = axis_weights(img.width(), out_w, sx, ox);
  const auto cols_w = axis_weights(img.height(), out_h, sy, oy);
  // smaller scale (larger step) first
  return separable(img, rows_w, cols_w, sy > sx);
}

int nearest_source_index(int j, int in_len, int out_len) {
  const auto idx = static_cast<int>(std::floor((j + 0.5) * in_len / out_len));
  return std::clamp(idx, 0, in_len - 1);
}

Image resize_nearest(const Image& img, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw InvalidInput("resize_nearest: output size must be >= 1");
  if (img.empty()) throw InvalidInput("resize_nearest: empty image");
  std::vector<int> xs(out_w);
  for (int x = 0; x < out_w; ++x) xs[x] = nearest_source_index(x, img.width(), out_w);
  Image out(img.channels(), out_h, out_w);
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < out_h; ++y) {
      const int sy = nearest_source_index(y, img.height(), out_h);
      for (int x = 0; x < out_w; ++x) out.at(c, y, x) = img.at(c, sy, xs[x]);
    }
  }
  return out;
}

}  // namespace dsrf
