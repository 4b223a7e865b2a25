#include "dsrf/aanet/optim.hpp"

#include <cmath>

#include "dsrf/core/error.hpp"

namespace dsrf::aanet {

Param& ParamStore::add(const std::string& name, Tensor value) {
  if (params_.count(name)) throw InvalidInput("parameter '" + name + "' already exists");
  Param p;
  p.grad = Tensor(value.n(), value.c(), value.h(), value.w());
  p.m = p.grad;
  p.v = p.grad;
  p.value = std::move(value);
  return params_.emplace(name, std::move(p)).first->second;
}

Param& ParamStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw InvalidInput("unknown parameter '" + name + "'");
  return it->second;
}

const Param& ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw InvalidInput("unknown parameter '" + name + "'");
  return it->second;
}

void ParamStore::zero_grad() {
  for (auto& [name, p] : params_) p.grad.fill(0.0);
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += p.value.size();
  return n;
}

namespace {

void update(Param& p, const Tensor& g, const AdamParams& a, double bc1, double bc2) {
  for (std::size_t i = 0; i < p.value.size(); ++i) {
    p.m[i] = a.beta1 * p.m[i] + (1.0 - a.beta1) * g[i];
    p.v[i] = a.beta2 * p.v[i] + (1.0 - a.beta2) * g[i] * g[i];
    const double mh = p.m[i] / bc1;
    const double vh = p.v[i] / bc2;
    p.value[i] -= a.lr * mh / (std::sqrt(vh) + a.eps);
  }
}

}  // namespace

void adam_step(ParamStore& store, const AdamParams& a) {
  ++store.step;
  const double bc1 = 1.0 - std::pow(a.beta1, static_cast<double>(store.step));
  const double bc2 = 1.0 - std::pow(a.beta2, static_cast<double>(store.step));
  for (auto& [name, p] : store.all()) update(p, p.grad, a, bc1, bc2);
}

void adam_step(ParamStore& store, const std::map<std::string, Tensor>& grads, const AdamParams& a) {
  for (auto& [name, p] : store.all()) {
    auto it = grads.find(name);
    if (it == grads.end()) throw InvalidInput("adam_step: missing gradient for '" + name + "'");
    if (!it->second.same_shape(p.value)) throw InvalidInput("adam_step: gradient shape mismatch for '" + name + "'");
  }
  if (grads.size() != store.all().size()) throw InvalidInput("adam_step: gradient for unknown parameter");
  ++store.step;
  const double bc1 = 1.0 - std::pow(a.beta1, static_cast<double>(store.step));
  const double bc2 = 1.0 - std::pow(a.beta2, static_cast<double>(store.step));
  for (auto& [name, p] : store.all()) update(p, grads.at(name), a, bc1, bc2);
}

double l1_loss(const Tensor& pred, const Tensor& target) {
  if (!pred.same_shape(target) || pred.empty()) throw InvalidInput("l1_loss: shape mismatch");
  double s = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - target[i]);
  return s / static_cast<double>(pred.size());
}

Tensor l1_loss_backward(const Tensor& pred, const Tensor& target) {
  if (!pred.same_shape(target) || pred.empty()) throw InvalidInput("l1_loss_backward: shape mismatch");
  Tensor g(pred.n(), pred.c(), pred.h(), pred.w());
  const double inv = 1.0 / static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    g[i] = d > 0 ? inv : (d < 0 ? -inv : 0.0);
  }
  return g;
}

}  // namespace dsrf::aanet
