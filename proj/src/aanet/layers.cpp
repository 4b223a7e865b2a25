#include "dsrf/aanet/layers.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "dsrf/core/error.hpp"
#include "dsrf/imgcore/resample.hpp"

namespace dsrf::aanet {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using StridedMap = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;
using ConstStridedMap = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;

// Upper bound on im2col buffer entries.
constexpr std::size_t kMaxColEntries = std::size_t{1} << 22;

int rows_per_chunk(int cin, int k, int h, int w) {
  const std::size_t per_row = static_cast<std::size_t>(cin) * k * k * w;
  return static_cast<int>(std::clamp<std::size_t>(kMaxColEntries / std::max<std::size_t>(per_row, 1), 1, h));
}

void im2col(const Tensor& x, int n, int k, int y0, int rows, RowMat& col) {
  const int cin = x.c(), h = x.h(), w = x.w(), pad = k / 2;
  col.resize(static_cast<Eigen::Index>(cin) * k * k, static_cast<Eigen::Index>(rows) * w);
  for (int c = 0; c < cin; ++c) {
    const double* src = x.plane(n, c);
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) {
        double* dst = col.data() + (static_cast<std::size_t>(c) * k * k + a * k + b) * rows * w;
        for (int yy = 0; yy < rows; ++yy) {
          const int sy = y0 + yy + a - pad;
          double* d = dst + static_cast<std::size_t>(yy) * w;
          if (sy < 0 || sy >= h) {
            std::fill(d, d + w, 0.0);
            continue;
          }
          const double* s = src + static_cast<std::size_t>(sy) * w + (b - pad);
          const int x0 = std::max(0, pad - b), x1 = std::min(w, w + pad - b);
          std::fill(d, d + x0, 0.0);
          std::copy(s + x0, s + x1, d + x0);
          std::fill(d + x1, d + w, 0.0);
        }
      }
    }
  }
}

void col2im_add(const RowMat& col, Tensor& dx, int n, int k, int y0, int rows) {
  const int cin = dx.c(), h = dx.h(), w = dx.w(), pad = k / 2;
  for (int c = 0; c < cin; ++c) {
    double* dst = dx.plane(n, c);
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) {
        const double* src = col.data() + (static_cast<std::size_t>(c) * k * k + a * k + b) * rows * w;
        for (int yy = 0; yy < rows; ++yy) {
          const int sy = y0 + yy + a - pad;
          if (sy < 0 || sy >= h) continue;
          const double* s = src + static_cast<std::size_t>(yy) * w;
          double* d = dst + static_cast<std::size_t>(sy) * w + (b - pad);
          const int x0 = std::max(0, pad - b), x1 = std::min(w, w + pad - b);
          for (int xx = x0; xx < x1; ++xx) d[xx] += s[xx];
        }
      }
    }
  }
}

void check_conv(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (w.c() != x.c()) {
    throw InvalidInput("conv2d: input has " + std::to_string(x.c()) + " channels, weight expects " +
                       std::to_string(w.c()));
  }
  if (w.h() != w.w() || w.h() % 2 == 0) throw InvalidInput("conv2d: kernel must be square and odd");
  if (b.n() != 1 || b.c() != w.n() || b.h() != 1 || b.w() != 1) throw InvalidInput("conv2d: bias shape mismatch");
}

Tensor init_tensor(int n, int c, int h, int w, Init init, int fan_in, std::mt19937_64& rng) {
  Tensor t(n, c, h, w);
  if (init == Init::zero) return t;
  const double std = init == Init::he ? std::sqrt(2.0 / fan_in) : 0.1 * std::sqrt(1.0 / fan_in);
  std::normal_distribution<double> dist(0.0, std);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
  return t;
}

}  // namespace

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
  check_conv(x, w, b);
  const int cout = w.n(), k = w.h(), H = x.h(), W = x.w();
  const Eigen::Index K = static_cast<Eigen::Index>(x.c()) * k * k;
  Tensor y(x.n(), cout, H, W);
  const Eigen::Map<const RowMat> wm(w.data(), cout, K);
  const int chunk = rows_per_chunk(x.c(), k, H, W);
  RowMat col;
  for (int n = 0; n < x.n(); ++n) {
    for (int y0 = 0; y0 < H; y0 += chunk) {
      const int rows = std::min(chunk, H - y0);
      const Eigen::Index cols = static_cast<Eigen::Index>(rows) * W;
      StridedMap out(y.plane(n, 0) + static_cast<std::size_t>(y0) * W, cout, cols,
                     Eigen::OuterStride<>(static_cast<Eigen::Index>(H) * W));
      if (k == 1) {
        const ConstStridedMap in(x.plane(n, 0) + static_cast<std::size_t>(y0) * W, x.c(), cols,
                                 Eigen::OuterStride<>(static_cast<Eigen::Index>(H) * W));
        out.noalias() = wm * in;
      } else {
        im2col(x, n, k, y0, rows, col);
        out.noalias() = wm * col;
      }
      for (int co = 0; co < cout; ++co) out.row(co).array() += b[co];
    }
  }
  return y;
}

Tensor conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor& dw, Tensor& db, bool want_dx) {
  check_conv(x, w, db);
  const int cout = w.n(), k = w.h(), H = x.h(), W = x.w();
  if (dy.n() != x.n() || dy.c() != cout || dy.h() != H || dy.w() != W) throw InvalidInput("conv2d: dy shape mismatch");
  if (!dw.same_shape(w)) throw InvalidInput("conv2d: dw shape mismatch");
  const Eigen::Index K = static_cast<Eigen::Index>(x.c()) * k * k;
  const Eigen::Map<const RowMat> wm(w.data(), cout, K);
  Eigen::Map<RowMat> dwm(dw.data(), cout, K);
  Tensor dx;
  if (want_dx) dx = Tensor(x.n(), x.c(), H, W);
  const int chunk = rows_per_chunk(x.c(), k, H, W);
  RowMat col, dcol;
  for (int n = 0; n < x.n(); ++n) {
    for (int co = 0; co < cout; ++co) {
      const double* p = dy.plane(n, co);
      double s = 0;
      for (int i = 0; i < H * W; ++i) s += p[i];
      db[co] += s;
    }
    for (int y0 = 0; y0 < H; y0 += chunk) {
      const int rows = std::min(chunk, H - y0);
      const Eigen::Index cols = static_cast<Eigen::Index>(rows) * W;
      const ConstStridedMap g(dy.plane(n, 0) + static_cast<std::size_t>(y0) * W, cout, cols,
                              Eigen::OuterStride<>(static_cast<Eigen::Index>(H) * W));
      if (k == 1) {
        const ConstStridedMap in(x.plane(n, 0) + static_cast<std::size_t>(y0) * W, x.c(), cols,
                                 Eigen::OuterStride<>(static_cast<Eigen::Index>(H) * W));
        dwm.noalias() += g * in.transpose();
        if (want_dx) {
          StridedMap d(dx.plane(n, 0) + static_cast<std::size_t>(y0) * W, x.c(), cols,
                       Eigen::OuterStride<>(static_cast<Eigen::Index>(H) * W));
          d.noalias() += wm.transpose() * g;
        }
      } else {
        im2col(x, n, k, y0, rows, col);
        dwm.noalias() += g * col.transpose();
        if (want_dx) {
          dcol.noalias() = wm.transpose() * g;
          col2im_add(dcol, dx, n, k, y0, rows);
        }
      }
    }
  }
  return dx;
}

Tensor linear_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
  const int in = w.c(), out = w.n();
  if (x.c() * x.h() * x.w() != in) throw InvalidInput("linear: input has the wrong feature count");
  if (b.c() != out) throw InvalidInput("linear: bias shape mismatch");
  Tensor y(x.n(), out, 1, 1);
  for (int n = 0; n < x.n(); ++n) {
    const double* xp = x.plane(n, 0);
    for (int o = 0; o < out; ++o) {
      const double* wp = w.plane(o, 0);
      double s = b[o];
      for (int i = 0; i < in; ++i) s += wp[i] * xp[i];
      y.at(n, o, 0, 0) = s;
    }
  }
  return y;
}

Tensor linear_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor& dw, Tensor& db) {
  const int in = w.c(), out = w.n();
  if (dy.n() != x.n() || dy.c() != out) throw InvalidInput("linear: dy shape mismatch");
  Tensor dx(x.n(), x.c(), x.h(), x.w());
  for (int n = 0; n < x.n(); ++n) {
    const double* xp = x.plane(n, 0);
    double* dxp = dx.plane(n, 0);
    for (int o = 0; o < out; ++o) {
      const double g = dy.at(n, o, 0, 0);
      if (g == 0.0) continue;
      const double* wp = w.plane(o, 0);
      double* dwp = dw.plane(o, 0);
      db[o] += g;
      for (int i = 0; i < in; ++i) {
        dwp[i] += g * xp[i];
        dxp[i] += g * wp[i];
      }
    }
  }
  return dx;
}

Tensor relu_forward(const Tensor& x) {
  Tensor y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::max(y[i], 0.0);
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& dy) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (!(x[i] > 0.0)) dx[i] = 0.0;
  }
  return dx;
}

Tensor leaky_relu_forward(const Tensor& x, double slope) {
  Tensor y = x;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0.0) y[i] *= slope;
  }
  return y;
}

Tensor leaky_relu_backward(const Tensor& x, const Tensor& dy, double slope) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (x[i] < 0.0) dx[i] *= slope;
  }
  return dx;
}

Tensor sigmoid_forward(const Tensor& x) {
  Tensor y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = 1.0 / (1.0 + std::exp(-y[i]));
  return y;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& dy) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= y[i] * (1.0 - y[i]);
  return dx;
}

Tensor depthwise_forward(const Tensor& x, const Tensor& kernels, int k) {
  const int C = x.c(), H = x.h(), W = x.w(), r = k / 2;
  if (kernels.n() != x.n() || kernels.c() * kernels.h() * kernels.w() != C * k * k) {
    throw InvalidInput("depthwise: kernel tensor does not match " + std::to_string(C) + " channels");
  }
  std::vector<int> ry(static_cast<std::size_t>(H) * k), rx(static_cast<std::size_t>(W) * k);
  for (int a = 0; a < k; ++a) {
    for (int y = 0; y < H; ++y) ry[static_cast<std::size_t>(a) * H + y] = reflect_index(y + a - r, H);
  }
  for (int b = 0; b < k; ++b) {
    for (int x0 = 0; x0 < W; ++x0) rx[static_cast<std::size_t>(b) * W + x0] = reflect_index(x0 + b - r, W);
  }
  const int x0 = std::min(r, W), x1 = std::max(x0, W - r);
  Tensor y(x.n(), C, H, W);
  for (int n = 0; n < x.n(); ++n) {
    const double* kp = kernels.plane(n, 0);
    for (int c = 0; c < C; ++c) {
      const double* kc = kp + static_cast<std::size_t>(c) * k * k;
      const double* src = x.plane(n, c);
      double* dst = y.plane(n, c);
      for (int a = 0; a < k; ++a) {
        for (int b = 0; b < k; ++b) {
          const int* cols = rx.data() + static_cast<std::size_t>(b) * W;
          const double kv = kc[a * k + b];
          for (int yy = 0; yy < H; ++yy) {
            const double* sr = src + static_cast<std::size_t>(ry[static_cast<std::size_t>(a) * H + yy]) * W;
            double* dr = dst + static_cast<std::size_t>(yy) * W;
            for (int xx = 0; xx < x0; ++xx) dr[xx] += kv * sr[cols[xx]];
            const double* sc = sr + (b - r);
            for (int xx = x0; xx < x1; ++xx) dr[xx] += kv * sc[xx];
            for (int xx = x1; xx < W; ++xx) dr[xx] += kv * sr[cols[xx]];
          }
        }
      }
    }
  }
  return y;
}

Tensor depthwise_backward(const Tensor& x, const Tensor& kernels, int k, const Tensor& dy, Tensor& dkernels) {
  const int C = x.c(), H = x.h(), W = x.w(), r = k / 2;
  if (!dy.same_shape(x)) throw InvalidInput("depthwise: dy shape mismatch");
  dkernels = Tensor(kernels.n(), kernels.c(), kernels.h(), kernels.w());
  Tensor dx(x.n(), C, H, W);
  // tap-major index tables: ry[a * H + y], rx[b * W + x]
  std::vector<int> ry(static_cast<std::size_t>(H) * k), rx(static_cast<std::size_t>(W) * k);
  for (int a = 0; a < k; ++a) {
    for (int y = 0; y < H; ++y) ry[static_cast<std::size_t>(a) * H + y] = reflect_index(y + a - r, H);
  }
  for (int b = 0; b < k; ++b) {
    for (int x0 = 0; x0 < W; ++x0) rx[static_cast<std::size_t>(b) * W + x0] = reflect_index(x0 + b - r, W);
  }
  for (int n = 0; n < x.n(); ++n) {
    const double* kp = kernels.plane(n, 0);
    double* dkp = dkernels.plane(n, 0);
    for (int c = 0; c < C; ++c) {
      const double* kc = kp + static_cast<std::size_t>(c) * k * k;
      double* dkc = dkp + static_cast<std::size_t>(c) * k * k;
      const double* src = x.plane(n, c);
      const double* g = dy.plane(n, c);
      double* d = dx.plane(n, c);
      for (int a = 0; a < k; ++a) {
        for (int b = 0; b < k; ++b) {
          const int* cols = rx.data() + static_cast<std::size_t>(b) * W;
          const double kv = kc[a * k + b];
          double acc = 0.0;
          for (int yy = 0; yy < H; ++yy) {
            const std::size_t row = static_cast<std::size_t>(ry[static_cast<std::size_t>(a) * H + yy]) * W;
            const double* gr = g + static_cast<std::size_t>(yy) * W;
            const double* sr = src + row;
            double* dr = d + row;
            const int x0 = std::min(r, W), x1 = std::max(x0, W - r);
            for (int xx = 0; xx < x0; ++xx) {
              acc += gr[xx] * sr[cols[xx]];
              dr[cols[xx]] += gr[xx] * kv;
            }
            const double* sc = sr + (b - r);
            double* dc = dr + (b - r);
            for (int xx = x0; xx < x1; ++xx) {
              acc += gr[xx] * sc[xx];
              dc[xx] += gr[xx] * kv;
            }
            for (int xx = x1; xx < W; ++xx) {
              acc += gr[xx] * sr[cols[xx]];
              dr[cols[xx]] += gr[xx] * kv;
            }
          }
          dkc[a * k + b] += acc;
        }
      }
    }
  }
  return dx;
}

Tensor channel_scale_forward(const Tensor& x, const Tensor& s) {
  if (s.n() != x.n() || s.c() != x.c()) throw InvalidInput("channel_scale: weight shape mismatch");
  Tensor y(x.n(), x.c(), x.h(), x.w());
  const std::size_t hw = static_cast<std::size_t>(x.h()) * x.w();
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      const double v = s.at(n, c, 0, 0);
      const double* src = x.plane(n, c);
      double* dst = y.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i) dst[i] = src[i] * v;
    }
  }
  return y;
}

Tensor channel_scale_backward(const Tensor& x, const Tensor& s, const Tensor& dy, Tensor& ds) {
  if (!dy.same_shape(x)) throw InvalidInput("channel_scale: dy shape mismatch");
  ds = Tensor(s.n(), s.c(), 1, 1);
  Tensor dx(x.n(), x.c(), x.h(), x.w());
  const std::size_t hw = static_cast<std::size_t>(x.h()) * x.w();
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      const double v = s.at(n, c, 0, 0);
      const double* src = x.plane(n, c);
      const double* g = dy.plane(n, c);
      double* d = dx.plane(n, c);
      double acc = 0;
      for (std::size_t i = 0; i < hw; ++i) {
        d[i] = g[i] * v;
        acc += g[i] * src[i];
      }
      ds.at(n, c, 0, 0) = acc;
    }
  }
  return dx;
}

Tensor upsample_bicubic_forward(const Tensor& x, int out_h, int out_w) {
  if (out_h <= 0 || out_w <= 0) throw InvalidInput("upsample: output size must be positive");
  const AxisWeights wy = resize_weights(x.h(), out_h);
  const AxisWeights wx = resize_weights(x.w(), out_w);
  Tensor y(x.n(), x.c(), out_h, out_w);
  std::vector<double> tmp(static_cast<std::size_t>(x.h()) * out_w);
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      const double* src = x.plane(n, c);
      for (int r = 0; r < x.h(); ++r) {
        for (int j = 0; j < out_w; ++j) {
          double s = 0;
          for (int t = 0; t < wx.taps; ++t) {
            const std::size_t q = static_cast<std::size_t>(j) * wx.taps + t;
            s += wx.weight[q] * src[static_cast<std::size_t>(r) * x.w() + wx.index[q]];
          }
          tmp[static_cast<std::size_t>(r) * out_w + j] = s;
        }
      }
      double* dst = y.plane(n, c);
      for (int i = 0; i < out_h; ++i) {
        for (int j = 0; j < out_w; ++j) {
          double s = 0;
          for (int t = 0; t < wy.taps; ++t) {
            const std::size_t q = static_cast<std::size_t>(i) * wy.taps + t;
            s += wy.weight[q] * tmp[static_cast<std::size_t>(wy.index[q]) * out_w + j];
          }
          dst[static_cast<std::size_t>(i) * out_w + j] = s;
        }
      }
    }
  }
  return y;
}

Tensor upsample_bicubic_backward(const Tensor& dy, int in_h, int in_w) {
  const int out_h = dy.h(), out_w = dy.w();
  const AxisWeights wy = resize_weights(in_h, out_h);
  const AxisWeights wx = resize_weights(in_w, out_w);
  Tensor dx(dy.n(), dy.c(), in_h, in_w);
  std::vector<double> tmp(static_cast<std::size_t>(in_h) * out_w);
  for (int n = 0; n < dy.n(); ++n) {
    for (int c = 0; c < dy.c(); ++c) {
      std::fill(tmp.begin(), tmp.end(), 0.0);
      const double* g = dy.plane(n, c);
      for (int i = 0; i < out_h; ++i) {
        for (int t = 0; t < wy.taps; ++t) {
          const std::size_t q = static_cast<std::size_t>(i) * wy.taps + t;
          const double wv = wy.weight[q];
          double* row = tmp.data() + static_cast<std::size_t>(wy.index[q]) * out_w;
          const double* grow = g + static_cast<std::size_t>(i) * out_w;
          for (int j = 0; j < out_w; ++j) row[j] += wv * grow[j];
        }
      }
      double* d = dx.plane(n, c);
      for (int r = 0; r < in_h; ++r) {
        for (int j = 0; j < out_w; ++j) {
          const double gv = tmp[static_cast<std::size_t>(r) * out_w + j];
          for (int t = 0; t < wx.taps; ++t) {
            const std::size_t q = static_cast<std::size_t>(j) * wx.taps + t;
            d[static_cast<std::size_t>(r) * in_w + wx.index[q]] += wx.weight[q] * gv;
          }
        }
      }
    }
  }
  return dx;
}

std::uint64_t sign_hash(const Tensor& t, std::uint64_t h) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    h ^= t[i] > 0.0 ? 1u : 0u;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---- layers --------------------------------------------------------------------------

Conv2d::Conv2d(ParamStore& store, const std::string& name, int cin, int cout, int k, Init init,
               std::mt19937_64& rng) {
  w_ = &store.add(name + ".weight", init_tensor(cout, cin, k, k, init, cin * k * k, rng));
  b_ = &store.add(name + ".bias", Tensor(1, cout, 1, 1));
}

Tensor Conv2d::forward(const Tensor& x) {
  x_ = x;
  return conv2d_forward(x, w_->value, b_->value);
}

Tensor Conv2d::backward(const Tensor& dy, bool want_dx) {
  return conv2d_backward(x_, w_->value, dy, w_->grad, b_->grad, want_dx);
}

Linear::Linear(ParamStore& store, const std::string& name, int in, int out, Init init, std::mt19937_64& rng) {
  w_ = &store.add(name + ".weight", init_tensor(out, in, 1, 1, init, in, rng));
  b_ = &store.add(name + ".bias", Tensor(1, out, 1, 1));
}

Tensor Linear::forward(const Tensor& x) {
  x_ = x;
  return linear_forward(x, w_->value, b_->value);
}

Tensor Linear::backward(const Tensor& dy) { return linear_backward(x_, w_->value, dy, w_->grad, b_->grad); }

AltitudeEncoder::AltitudeEncoder(ParamStore& store, const std::string& name, int embed, std::mt19937_64& rng)
    : fc1_(store, name + ".fc1", 1, embed, Init::he, rng), fc2_(store, name + ".fc2", embed, embed, Init::he, rng) {}

Tensor AltitudeEncoder::forward(const Tensor& code) {
  h_ = fc1_.forward(code);
  return fc2_.forward(relu_forward(h_));
}

void AltitudeEncoder::backward(const Tensor& de) { fc1_.backward(relu_backward(h_, fc2_.backward(de))); }

Dal::Dal(ParamStore& store, const std::string& name, int channels, int embed, int k, std::mt19937_64& rng)
    : channels_(channels),
      k_(k),
      ka_(store, name + ".kernel_fc1", embed, embed, Init::he, rng),
      kb_(store, name + ".kernel_fc2", embed, channels * k * k, Init::small, rng),
      aa_(store, name + ".attn_fc1", embed, embed, Init::he, rng),
      ab_(store, name + ".attn_fc2", embed, channels, Init::small, rng),
      mix_(store, name + ".mix", channels, channels, 1, Init::he, rng) {
  if (k % 2 == 0) throw InvalidInput("DAL kernel size must be odd");
  // predicted kernels start near a centered delta
  Tensor& b = kb_.bias().value;
  for (int c = 0; c < channels; ++c) b[static_cast<std::size_t>(c) * k * k + (k / 2) * k + k / 2] = 1.0;
  // variance-preserving 1x1 mix
  Tensor& w = mix_.weight().value;
  for (std::size_t i = 0; i < w.size(); ++i) w[i] *= std::sqrt(0.5);
}

Tensor Dal::forward(const Tensor& feat, const Tensor& e) {
  if (feat.c() != channels_) {
    throw InvalidInput("DAL expects " + std::to_string(channels_) + " channels, got " + std::to_string(feat.c()));
  }
  if (e.n() != feat.n()) throw InvalidInput("DAL: embedding batch does not match features");
  feat_ = feat;
  ka_pre_ = ka_.forward(e);
  kernels_ = kb_.forward(relu_forward(ka_pre_));
  dw_out_ = depthwise_forward(feat, kernels_, k_);
  Tensor a = mix_.forward(dw_out_);
  aa_pre_ = aa_.forward(e);
  att_ = sigmoid_forward(ab_.forward(relu_forward(aa_pre_)));
  const Tensor b = channel_scale_forward(feat, att_);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

Tensor Dal::backward(const Tensor& dy, Tensor& de) {
  const Tensor d_dw = mix_.backward(dy);
  Tensor dkernels;
  Tensor dfeat = depthwise_backward(feat_, kernels_, k_, d_dw, dkernels);
  const Tensor de_a = ka_.backward(relu_backward(ka_pre_, kb_.backward(dkernels)));
  Tensor datt;
  const Tensor dfeat_b = channel_scale_backward(feat_, att_, dy, datt);
  const Tensor de_b = aa_.backward(relu_backward(aa_pre_, ab_.backward(sigmoid_backward(att_, datt))));
  for (std::size_t i = 0; i < dfeat.size(); ++i) dfeat[i] += dfeat_b[i];
  if (de.empty()) de = Tensor(de_a.n(), de_a.c(), de_a.h(), de_a.w());
  for (std::size_t i = 0; i < de.size(); ++i) de[i] += de_a[i] + de_b[i];
  return dfeat;
}

Dab::Dab(ParamStore& store, const std::string& name, int channels, int embed, int k, std::mt19937_64& rng)
    : dal1_(store, name + ".dal1", channels, embed, k, rng),
      dal2_(store, name + ".dal2", channels, embed, k, rng),
      conv1_(store, name + ".conv1", channels, channels, 3, Init::he, rng),
      conv2_(store, name + ".conv2", channels, channels, 3, Init::he, rng) {}

Tensor Dab::forward(const Tensor& feat, const Tensor& e) {
  z1_ = conv1_.forward(dal1_.forward(feat, e));
  z2_ = conv2_.forward(dal2_.forward(relu_forward(z1_), e));
  return relu_forward(z2_);
}

std::uint64_t Dab::activation_signature() const {
  return sign_hash(z2_, sign_hash(z1_, dal1_.activation_signature() ^ (dal2_.activation_signature() * 31)));
}

Tensor Dab::backward(const Tensor& dy, Tensor& de) {
  Tensor g = conv2_.backward(relu_backward(z2_, dy));
  g = dal2_.backward(g, de);
  g = conv1_.backward(relu_backward(z1_, g));
  return dal1_.backward(g, de);
}

UpsampleHead::UpsampleHead(ParamStore& store, const std::string& name, int channels, std::mt19937_64& rng)
    : conv_(store, name + ".conv", channels, channels, 3, Init::he, rng) {}

Tensor UpsampleHead::forward(const Tensor& feat, int out_h, int out_w) {
  in_h_ = feat.h();
  in_w_ = feat.w();
  z_ = conv_.forward(upsample_bicubic_forward(feat, out_h, out_w));
  return leaky_relu_forward(z_);
}

Tensor UpsampleHead::backward(const Tensor& dy) {
  return upsample_bicubic_backward(conv_.backward(leaky_relu_backward(z_, dy)), in_h_, in_w_);
}

}  // namespace dsrf::aanet
