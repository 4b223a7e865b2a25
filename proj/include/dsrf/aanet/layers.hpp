#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "dsrf/aanet/optim.hpp"
#include "dsrf/aanet/tensor.hpp"

namespace dsrf::aanet {

// ---- stateless ops -------------------------------------------------------------------
// Gradients with respect to parameters are accumulated (+=); input gradients are returned.

/// k x k convolution, stride 1, zero padding k/2. w: (cout, cin, k, k), b: (1, cout, 1, 1).
Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b);
/// Returns dx (skipped when want_dx is false).
Tensor conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor& dw, Tensor& db,
                       bool want_dx = true);

/// x: (n, in, 1, 1), w: (out, in, 1, 1), b: (1, out, 1, 1).
Tensor linear_forward(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor linear_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor& dw, Tensor& db);

Tensor relu_forward(const Tensor& x);
/// Subgradient 0 at x == 0.
Tensor relu_backward(const Tensor& x, const Tensor& dy);
Tensor leaky_relu_forward(const Tensor& x, double slope = 0.01);
Tensor leaky_relu_backward(const Tensor& x, const Tensor& dy, double slope = 0.01);
Tensor sigmoid_forward(const Tensor& x);
/// Takes the sigmoid output y.
Tensor sigmoid_backward(const Tensor& y, const Tensor& dy);

/// Per-sample depth-wise k x k convolution with symmetric (edge-duplicating) padding.
/// kernels: (n, c * k * k, 1, 1), laid out [channel][row][col].
Tensor depthwise_forward(const Tensor& x, const Tensor& kernels, int k);
/// Returns dx and writes dkernels (same shape as kernels, overwritten).
Tensor depthwise_backward(const Tensor& x, const Tensor& kernels, int k, const Tensor& dy, Tensor& dkernels);

/// y[n,c] = x[n,c] * s[n,c]; s: (n, c, 1, 1).
Tensor channel_scale_forward(const Tensor& x, const Tensor& s);
/// Returns dx and writes ds (overwritten).
Tensor channel_scale_backward(const Tensor& x, const Tensor& s, const Tensor& dy, Tensor& ds);

/// Bicubic (a = -0.5) spatial resize of every feature map, no clamping or antialiasing.
Tensor upsample_bicubic_forward(const Tensor& x, int out_h, int out_w);
/// Adjoint of upsample_bicubic_forward.
Tensor upsample_bicubic_backward(const Tensor& dy, int in_h, int in_w);

/// Folds the sign pattern (v > 0) of t into an FNV-1a hash; used to detect when a
/// perturbation crosses a ReLU kink.
std::uint64_t sign_hash(const Tensor& t, std::uint64_t h = 0xcbf29ce484222325ULL);

// ---- parameterized layers with activation caches ------------------------------------

enum class Init { he, small, zero };

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(ParamStore& store, const std::string& name, int cin, int cout, int k, Init init, std::mt19937_64& rng);
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy, bool want_dx = true);
  Param& weight() { return *w_; }
  Param& bias() { return *b_; }

 private:
  Param* w_ = nullptr;
  Param* b_ = nullptr;
  Tensor x_;
};

class Linear {
 public:
  Linear() = default;
  Linear(ParamStore& store, const std::string& name, int in, int out, Init init, std::mt19937_64& rng);
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
  Param& weight() { return *w_; }
  Param& bias() { return *b_; }

 private:
  Param* w_ = nullptr;
  Param* b_ = nullptr;
  Tensor x_;
};

/// Conditioning code -> embedding: fc2(relu(fc1(code))). code: (n, 1, 1, 1).
class AltitudeEncoder {
 public:
  AltitudeEncoder() = default;
  AltitudeEncoder(ParamStore& store, const std::string& name, int embed, std::mt19937_64& rng);
  Tensor forward(const Tensor& code);
  void backward(const Tensor& de);
  std::uint64_t activation_signature() const { return sign_hash(h_); }
  Linear& fc1() { return fc1_; }
  Linear& fc2() { return fc2_; }

 private:
  Linear fc1_, fc2_;
  Tensor h_;
};

/// Degradation-aware layer. Branch A predicts per-channel depth-wise kernels from the
/// embedding (fc -> relu -> fc), convolves the features and mixes them with a 1x1 conv.
/// Branch B predicts channel attention (fc -> relu -> fc -> sigmoid). Output is A + B.
class Dal {
 public:
  Dal() = default;
  Dal(ParamStore& store, const std::string& name, int channels, int embed, int k, std::mt19937_64& rng);
  Tensor forward(const Tensor& feat, const Tensor& e);
  /// Returns d(feat); accumulates d(e) into de.
  Tensor backward(const Tensor& dy, Tensor& de);
  std::uint64_t activation_signature() const { return sign_hash(aa_pre_, sign_hash(ka_pre_)); }

  Linear& kernel_fc1() { return ka_; }
  Linear& kernel_fc2() { return kb_; }
  Conv2d& mix() { return mix_; }
  Linear& attention_fc1() { return aa_; }
  Linear& attention_fc2() { return ab_; }
  int channels() const { return channels_; }
  int kernel_size() const { return k_; }

 private:
  int channels_ = 0;
  int k_ = 3;
  Linear ka_, kb_, aa_, ab_;
  Conv2d mix_;
  Tensor feat_, ka_pre_, kernels_, dw_out_, aa_pre_, att_;
};

/// DAL -> 3x3 conv -> ReLU -> DAL -> 3x3 conv -> ReLU.
class Dab {
 public:
  Dab() = default;
  Dab(ParamStore& store, const std::string& name, int channels, int embed, int k, std::mt19937_64& rng);
  Tensor forward(const Tensor& feat, const Tensor& e);
  Tensor backward(const Tensor& dy, Tensor& de);
  std::uint64_t activation_signature() const;
  Dal& dal1() { return dal1_; }
  Dal& dal2() { return dal2_; }
  Conv2d& conv1() { return conv1_; }
  Conv2d& conv2() { return conv2_; }

 private:
  Dal dal1_, dal2_;
  Conv2d conv1_, conv2_;
  Tensor z1_, z2_;
};

/// Feature-space bicubic upsampling followed by a 3x3 conv and LeakyReLU(0.01).
class UpsampleHead {
 public:
  UpsampleHead() = default;
  UpsampleHead(ParamStore& store, const std::string& name, int channels, std::mt19937_64& rng);
  Tensor forward(const Tensor& feat, int out_h, int out_w);
  Tensor backward(const Tensor& dy);
  std::uint64_t activation_signature() const { return sign_hash(z_); }
  Conv2d& conv() { return conv_; }

 private:
  Conv2d conv_;
  Tensor z_;
  int in_h_ = 0, in_w_ = 0;
};

}  // namespace dsrf::aanet
