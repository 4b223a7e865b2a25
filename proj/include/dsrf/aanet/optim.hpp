#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "dsrf/aanet/tensor.hpp"

namespace dsrf::aanet {

struct Param {
  Tensor value;
  Tensor grad;
  Tensor m;  ///< ADAM first moment
  Tensor v;  ///< ADAM second moment
};

/// Named parameters with gradients and optimizer state. Entries are never removed, so
/// references returned by add/get stay valid.
class ParamStore {
 public:
  Param& add(const std::string& name, Tensor value);
  Param& get(const std::string& name);
  const Param& get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  std::map<std::string, Param>& all() { return params_; }
  const std::map<std::string, Param>& all() const { return params_; }

  void zero_grad();
  std::size_t scalar_count() const;

  std::int64_t step = 0;

 private:
  std::map<std::string, Param> params_;
};

struct AdamParams {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected ADAM update from the gradients stored in each Param; increments step.
void adam_step(ParamStore& store, const AdamParams& p = {});

/// Same, with gradients supplied separately (must match every parameter's shape).
void adam_step(ParamStore& store, const std::map<std::string, Tensor>& grads, const AdamParams& p = {});

/// Mean absolute error. Throws InvalidInput on shape mismatch.
double l1_loss(const Tensor& pred, const Tensor& target);
/// d(l1_loss)/d(pred) = sign(pred - target) / N, with sign(0) = 0.
Tensor l1_loss_backward(const Tensor& pred, const Tensor& target);

}  // namespace dsrf::aanet
