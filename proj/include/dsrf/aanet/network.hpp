#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dsrf/aanet/layers.hpp"
#include "dsrf/aanet/optim.hpp"
#include "dsrf/imgcore/image.hpp"

namespace dsrf::aanet {

enum class Conditioning { none, altitude };
enum class Head { pre_upsample, upsample };

std::string to_string(Conditioning c);
Conditioning parse_conditioning(const std::string& s);
std::string to_string(Head h);
Head parse_head(const std::string& s);

constexpr double kAltitudeNorm = 80.0;

struct NetworkConfig {
  int hidden_layers = 8;
  int channels = 128;
  int dal_kernel = 3;
  int embedding_dim = 64;
  int scale_num = 50;
  int scale_den = 9;
  Conditioning conditioning = Conditioning::altitude;
  Head head = Head::pre_upsample;

  void validate() const;
  std::string serialize() const;
  /// FNV-1a of serialize().
  std::uint64_t hash() const;
};

/// Value fed to the altitude encoder: altitude / 80 when conditioned, constant 1 otherwise
/// (the altitude is not read in that case). Throws InvalidInput for non-positive altitudes
/// in altitude mode.
double altitude_code(double altitude_m, Conditioning mode);

/// round(len * num / den).
int scaled_length(int len, int num, int den);

/// Residual FCNN with altitude-aware layers between consecutive hidden convolutions.
/// The final convolution starts at zero, so a fresh network returns the bicubic upsample.
class AaFcnn {
 public:
  explicit AaFcnn(const NetworkConfig& config, std::uint64_t seed = 0);
  AaFcnn(const AaFcnn&) = delete;
  AaFcnn& operator=(const AaFcnn&) = delete;

  const NetworkConfig& config() const { return config_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

  /// input: (n, 3, h, w) network input (the bicubic upsample for the pre-upsample head,
  /// the LR image for the upsample head); base: (n, 3, H, W) bicubic upsample added to
  /// the residual. codes: (n, 1, 1, 1) encoder inputs. Caches activations for backward.
  Tensor forward(const Tensor& input, const Tensor& base, const Tensor& codes);
  /// Accumulates parameter gradients for d(loss)/d(output).
  void backward(const Tensor& dout);

  /// Encoder inputs for a batch of altitudes under this network's conditioning mode.
  Tensor codes_for(const std::vector<double>& altitudes) const;

  /// Super-resolves one LR image (values in [0,1]) at the given altitude.
  Image infer(const Image& lr, double altitude_m);
  /// Same with an explicit encoder input (1.0 reproduces the frozen-altitude code).
  Image infer_with_code(const Image& lr, double code);

  /// Hash of every ReLU/LeakyReLU sign pattern and the clamp pattern of the last forward.
  std::uint64_t activation_signature() const;

  /// Disables output clamping (used by gradient checks).
  void set_clamp(bool on) { clamp_ = on; }

  AltitudeEncoder& encoder() { return encoder_; }
  std::vector<Dal>& dals() { return dals_; }

 private:
  NetworkConfig config_;
  ParamStore store_;
  AltitudeEncoder encoder_;
  Conv2d conv_in_;
  std::vector<Conv2d> hidden_;
  std::vector<Dal> dals_;
  UpsampleHead up_head_;
  Conv2d conv_out_;
  bool clamp_ = true;

  Tensor z_in_;
  std::vector<Tensor> z_hidden_;
  Tensor pre_clamp_;
  int in_h_ = 0, in_w_ = 0;
};

/// Bicubic upsample of a batch of LR images to the network's output size.
Tensor bicubic_upsample_batch(const std::vector<Image>& lr, int num, int den);

}  // namespace dsrf::aanet
