#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dsrf/aanet/network.hpp"
#include "dsrf/core/error.hpp"

namespace dsrf::aanet {

struct GradCheckOptions {
  double step = 1e-3;
  double tolerance = 1e-4;
  /// Denominator floor for the relative error, so near-zero gradients compare absolutely.
  double abs_floor = 1e-6;
  /// Coordinates checked per layer; every coordinate when the layer has fewer.
  int max_coords = 200;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  std::string layer;
  int checked = 0;
  /// Coordinates whose perturbation changed an activation pattern (non-differentiable).
  int skipped = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::string worst;  ///< "variable[index]" of the largest relative error
  double tolerance = 0.0;

  bool passed() const { return checked > 0 && max_rel_error <= tolerance; }
  std::string summary() const;
};

class GradCheckFailure : public Error {
 public:
  explicit GradCheckFailure(const GradCheckReport& r);
  const GradCheckReport& report() const { return report_; }

 private:
  GradCheckReport report_;
};

/// A differentiable quantity: its values (perturbed in place) and the analytic gradient
/// filled in by the `analytic` callback.
struct GradVariable {
  std::string name;
  std::vector<double>* values;
  const std::vector<double>* grads;
};

/// Central finite differences against analytic gradients. `loss` runs a forward pass and
/// returns the scalar loss; `analytic` runs forward + backward at the unperturbed point;
/// `signature` (optional) hashes the activation pattern of the last forward pass, and
/// coordinates whose perturbation changes it are skipped.
GradCheckReport gradient_check(const std::string& layer, const std::vector<GradVariable>& vars,
                               const std::function<double()>& loss, const std::function<void()>& analytic,
                               const std::function<std::uint64_t()>& signature, const GradCheckOptions& opts);

/// Throws GradCheckFailure naming the layer when the report did not pass.
void require_passed(const GradCheckReport& report);

/// Checks every layer type on small random instances: conv 3x3 and 1x1, linear, ReLU,
/// LeakyReLU, sigmoid, depth-wise conv (features and kernels), channel scale, bicubic
/// upsampling, L1 loss, altitude encoder, DAL, DAB and the upsample head.
std::vector<GradCheckReport> check_layers(const GradCheckOptions& opts = {});

/// Full network check on a (2, 3, size, size) network input with the output convolution
/// re-initialized randomly so gradients reach every layer.
GradCheckReport check_network(const NetworkConfig& config, int size, const GradCheckOptions& opts = {});

}  // namespace dsrf::aanet
