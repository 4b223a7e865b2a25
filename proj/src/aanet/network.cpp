#include "dsrf/aanet/network.hpp"

#include <cmath>
#include <sstream>

#include "dsrf/core/error.hpp"
#include "dsrf/imgcore/resample.hpp"

namespace dsrf::aanet {

std::string to_string(Conditioning c) { return c == Conditioning::altitude ? "altitude" : "none"; }

Conditioning parse_conditioning(const std::string& s) {
  if (s == "altitude") return Conditioning::altitude;
  if (s == "none") return Conditioning::none;
  throw InvalidInput("unknown conditioning mode '" + s + "'");
}

std::string to_string(Head h) { return h == Head::upsample ? "upsample" : "pre_upsample"; }

Head parse_head(const std::string& s) {
  if (s == "pre_upsample") return Head::pre_upsample;
  if (s == "upsample") return Head::upsample;
  throw InvalidInput("unknown head '" + s + "'");
}

void NetworkConfig::validate() const {
  if (hidden_layers < 1 || channels < 1 || embedding_dim < 1) throw InvalidInput("network sizes must be positive");
  if (dal_kernel < 1 || dal_kernel % 2 == 0) throw InvalidInput("DAL kernel size must be odd");
  if (scale_num <= 0 || scale_den <= 0) throw InvalidInput("scale must be positive");
}

std::string NetworkConfig::serialize() const {
  std::ostringstream os;
  os << "hidden_layers=" << hidden_layers << ";channels=" << channels << ";dal_kernel=" << dal_kernel
     << ";embedding_dim=" << embedding_dim << ";scale=" << scale_num << "/" << scale_den
     << ";conditioning=" << to_string(conditioning) << ";head=" << to_string(head);
  return os.str();
}

std::uint64_t NetworkConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double altitude_code(double altitude_m, Conditioning mode) {
  if (mode == Conditioning::none) return 1.0;
  if (!(altitude_m > 0.0)) throw InvalidInput("altitude must be positive");
  return altitude_m / kAltitudeNorm;
}

int scaled_length(int len, int num, int den) {
  return static_cast<int>(std::lround(static_cast<double>(len) * num / den));
}

AaFcnn::AaFcnn(const NetworkConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(seed);
  const int C = config_.channels;
  encoder_ = AltitudeEncoder(store_, "encoder", config_.embedding_dim, rng);
  conv_in_ = Conv2d(store_, "conv_in", 3, C, 3, Init::he, rng);
  for (int i = 0; i < config_.hidden_layers; ++i) {
    hidden_.emplace_back(store_, "hidden" + std::to_string(i), C, C, 3, Init::he, rng);
  }
  for (int i = 0; i + 1 < config_.hidden_layers; ++i) {
    dals_.emplace_back(store_, "dal" + std::to_string(i), C, config_.embedding_dim, config_.dal_kernel, rng);
  }
  if (config_.head == Head::upsample) up_head_ = UpsampleHead(store_, "up_head", C, rng);
  conv_out_ = Conv2d(store_, "conv_out", C, 3, 3, Init::zero, rng);
}

Tensor AaFcnn::codes_for(const std::vector<double>& altitudes) const {
  Tensor t(static_cast<int>(altitudes.size()), 1, 1, 1);
  for (std::size_t i = 0; i < altitudes.size(); ++i) t[i] = altitude_code(altitudes[i], config_.conditioning);
  return t;
}

Tensor AaFcnn::forward(const Tensor& input, const Tensor& base, const Tensor& codes) {
  if (input.c() != 3 || base.c() != 3) throw InvalidInput("network expects 3-channel input, got " + input.shape_string());
  if (codes.n() != input.n() || base.n() != input.n()) throw InvalidInput("network: batch sizes differ");
  if (config_.head == Head::pre_upsample && !input.same_shape(base)) {
    throw InvalidInput("network: pre-upsampled input must match the base shape");
  }
  in_h_ = input.h();
  in_w_ = input.w();
  const Tensor e = encoder_.forward(codes);
  z_in_ = conv_in_.forward(input);
  Tensor h = relu_forward(z_in_);
  z_hidden_.resize(hidden_.size());
  for (std::size_t i = 0; i < hidden_.size(); ++i) {
    z_hidden_[i] = hidden_[i].forward(h);
    h = relu_forward(z_hidden_[i]);
    if (i < dals_.size()) h = dals_[i].forward(h, e);
  }
  if (config_.head == Head::upsample) h = up_head_.forward(h, base.h(), base.w());
  Tensor y = conv_out_.forward(h);
  if (!y.same_shape(base)) throw InvalidInput("network: residual shape does not match the base");
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += base[i];
  pre_clamp_ = y;
  if (clamp_) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::clamp(y[i], 0.0, 1.0);
  }
  return y;
}

void AaFcnn::backward(const Tensor& dout) {
  if (!dout.same_shape(pre_clamp_)) throw InvalidInput("network backward: gradient shape mismatch");
  Tensor g = dout;
  if (clamp_) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (pre_clamp_[i] < 0.0 || pre_clamp_[i] > 1.0) g[i] = 0.0;
    }
  }
  g = conv_out_.backward(g);
  if (config_.head == Head::upsample) g = up_head_.backward(g);
  Tensor de;
  for (std::size_t i = hidden_.size(); i-- > 0;) {
    if (i < dals_.size()) g = dals_[i].backward(g, de);
    g = hidden_[i].backward(relu_backward(z_hidden_[i], g));
  }
  conv_in_.backward(relu_backward(z_in_, g), false);
  if (!de.empty()) encoder_.backward(de);
}

std::uint64_t AaFcnn::activation_signature() const {
  std::uint64_t h = sign_hash(z_in_, encoder_.activation_signature());
  for (const auto& z : z_hidden_) h = sign_hash(z, h);
  for (const auto& d : dals_) h = h * 31 + d.activation_signature();
  if (config_.head == Head::upsample) h = h * 31 + up_head_.activation_signature();
  if (clamp_) {
    for (std::size_t i = 0; i < pre_clamp_.size(); ++i) {
      h ^= pre_clamp_[i] < 0.0 ? 1u : (pre_clamp_[i] > 1.0 ? 2u : 0u);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

Tensor bicubic_upsample_batch(const std::vector<Image>& lr, int num, int den) {
  std::vector<Image> up;
  up.reserve(lr.size());
  for (const auto& img : lr) {
    up.push_back(resize_bicubic(img, scaled_length(img.height(), num, den), scaled_length(img.width(), num, den)));
  }
  return images_to_tensor(up);
}

Image AaFcnn::infer(const Image& lr, double altitude_m) {
  return infer_with_code(lr, altitude_code(altitude_m, config_.conditioning));
}

Image AaFcnn::infer_with_code(const Image& lr, double code) {
  if (lr.channels() != 3) throw InvalidInput("infer expects an RGB image");
  const Tensor base = bicubic_upsample_batch({lr}, config_.scale_num, config_.scale_den);
  const Tensor codes(1, 1, 1, 1, code);
  const Tensor input = config_.head == Head::pre_upsample ? base : image_to_tensor(lr);
  return tensor_to_image(forward(input, base, codes));
}

}  // namespace dsrf::aanet
