#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "dsrf/aanet/train.hpp"
#include "dsrf/geometry/homography.hpp"
#include "dsrf/imgcore/image.hpp"
#include "dsrf/registration/manifest.hpp"

namespace dsrf::synth {

/// Gaussian blur sigma (HR pixels) as a linear function of altitude between 10 m and 140 m.
struct BlurModel {
  double sigma_low = 0.8;
  double sigma_high = 3.0;
  double sigma(double altitude_m) const;
};

/// Band-limited colored noise: the sum over `scales` of white noise generated at
/// size/scale, blurred and bicubic-upsampled, each octave normalized to `amplitude`.
/// Values are centred on 0.5 and clamped to [0,1].
Image octave_texture(int height, int width, const std::vector<double>& scales, double amplitude,
                     std::mt19937_64& rng);

struct SceneSpec {
  int scenes = 10;
  std::vector<int> altitudes{registration::kAltitudes.begin(), registration::kAltitudes.end()};
  /// HR frame size; both must be multiples of 50.
  int hr_width = 4000;
  int hr_height = 3000;
  /// Rotation (degrees), translation and corner perspective jitter of the LR frame, in LR px.
  double jitter_rotation_deg = 2.0;
  double jitter_shift = 3.0;
  double jitter_perspective = 1.5;
  /// Additive Gaussian noise on LR frames, in [0,1] units.
  double noise_sigma = 0.003;
  /// Amplitude of low-frequency per-channel gain drift on LR frames.
  double color_drift = 0.08;
  BlurModel blur;
  /// Fraction of pairs that get one corrupted LR region.
  double corrupt_fraction = 0.3;
  int burst = registration::kBurstLength;
  bool raw = false;
  int bit_depth = 8;
  std::uint64_t seed = 0;

  void validate() const;
  /// HR frame width divided by 50/9.
  int fov_width() const { return hr_width * 9 / 50; }
  int fov_height() const { return hr_height * 9 / 50; }
};

struct RenderedPair {
  Image hr;
  std::vector<Image> lr_burst;
  /// LR frame -> HR, exact.
  geometry::Homography truth_lr_to_hr;
  double blur_sigma = 0.0;
  std::vector<Rect> corrupted_hr_rects;
};

/// Scene `scene` at `altitude`. Deterministic in (spec.seed, scene, altitude).
RenderedPair render_pair(const SceneSpec& spec, int scene, int altitude);

/// Writes <out>/<scene>/<altitude>/{hr.png, lr_K.png, raw_K.pgm}, manifest.jsonl and
/// truth.json. Scenes split 70/10/20 into train/val/test by index. Returns the manifest.
std::vector<registration::ScenePair> write_dataset(const SceneSpec& spec, const std::filesystem::path& out);

struct SrSpec {
  int count_per_altitude = 32;
  std::vector<int> altitudes{registration::kAltitudes.begin(), registration::kAltitudes.end()};
  int lr_size = 18;
  BlurModel blur{1.0, 5.0};
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

/// HR textures of lr_size*50/9 pixels degraded by the altitude blur and bicubic
/// downsampling to lr_size. Deterministic in seed.
std::vector<aanet::SrSample> make_sr_samples(const SrSpec& spec);

}  // namespace dsrf::synth
