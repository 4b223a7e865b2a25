#pragma once

#include <string>
#include <vector>

#include "dsrf/imgcore/image.hpp"

namespace dsrf::analysis {

constexpr int kPsdTile = 512;
constexpr int kPsdBins = 64;
constexpr double kPowerFloor = 1e-30;

struct RadialPSD {
  std::vector<double> frequency;  ///< bin centers, cycles per pixel in [0, 0.5]
  std::vector<double> log_power;  ///< mean over images of log10 bin power
  int image_count = 0;
  std::vector<std::string> notes;

  /// Largest over smallest linear bin power, skipping the first `skip` bins.
  double flatness_ratio(int skip = 1) const;
  std::string to_csv() const;
};

struct PsdOptions {
  /// Centered crop keeping this fraction of each side before tiling.
  double crop_fraction = 1.0;
  int tile = kPsdTile;
  int bins = kPsdBins;
};

/// Luma, center crop, Hann-windowed center tile, |F|^2 / N, radial bins, log10, averaged
/// over images. Crops smaller than the tile are upscaled (noted). Throws InvalidInput
/// for an empty list.
RadialPSD radial_psd(const std::vector<Image>& images, const PsdOptions& opts = {});

/// Crop fraction that equalizes ground footprint with a reference altitude.
double altitude_crop_fraction(int reference_altitude, int altitude);

}  // namespace dsrf::analysis
