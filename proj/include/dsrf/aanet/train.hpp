#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <vector>

#include "dsrf/aanet/network.hpp"
#include "dsrf/aanet/optim.hpp"
#include "dsrf/imgcore/image.hpp"
#include "dsrf/metrics/metrics.hpp"

namespace dsrf::aanet {

/// One training pair. hr must be round(lr * 50/9) in both dimensions.
struct SrSample {
  Image lr;
  Image hr;
  double altitude_m = 0.0;
};

struct TrainConfig {
  int steps = 2000;
  int batch = 8;
  AdamParams adam;
  /// Random square crop side. Output pixels for the pre-upsample head; LR pixels (a
  /// multiple of the scale denominator) for the upsample head. 0 trains on whole samples.
  int crop = 0;
  int val_every = 100;
  std::uint64_t seed = 0;
  metrics::EvalOptions eval;
};

struct ValidationRow {
  int step = 0;
  double loss = 0.0;  ///< mean training loss since the previous row
  std::map<double, double> psnr_by_altitude;
};

struct TrainResult {
  std::vector<double> losses;  ///< per step
  std::vector<ValidationRow> validation;
};

/// Mean Y-PSNR of the network output per altitude.
std::map<double, double> evaluate_psnr(AaFcnn& net, const std::vector<SrSample>& samples,
                                       const metrics::EvalOptions& opts = {});

/// Mean Y-PSNR of the plain bicubic upsample per altitude.
std::map<double, double> bicubic_psnr(const std::vector<SrSample>& samples, int num, int den,
                                      const metrics::EvalOptions& opts = {});

/// Seeded mini-batch L1 + ADAM. Epochs visit every sample once in a shuffled order; a
/// validation row is produced every val_every steps and after the last step (when a
/// validation set is given). Rows are streamed to `metrics_csv` as they are produced.
/// Throws InvalidInput for an empty training set or inconsistent sample shapes.
TrainResult train(AaFcnn& net, const std::vector<SrSample>& train_set, const std::vector<SrSample>& val_set,
                  const TrainConfig& config, std::ostream* metrics_csv = nullptr);

}  // namespace dsrf::aanet
