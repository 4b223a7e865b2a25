#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dsrf/imgcore/image.hpp"

namespace dsrf::features {

/// Keypoint in continuous image coordinates: pixel (i, j) covers [j, j+1) x [i, i+1).
struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double scale = 0.0;        ///< sigma in input pixels
  double orientation = 0.0;  ///< radians
  double response = 0.0;     ///< |DoG| at the refined extremum
  int octave = 0;
  double layer = 0.0;        ///< fractional scale-space layer within the octave
};

using Descriptor = std::array<float, 128>;

struct SiftParams {
  int octave_layers = 3;
  double contrast_threshold = 0.03;
  double edge_ratio = 10.0;
  double sigma = 1.6;
  double input_sigma = 0.5;
  int max_keypoints = 5000;
  bool upsample_first_octave = false;
  /// Octaves stop once the smaller image side would drop below this.
  int min_octave_size = 16;
};

struct DescribedKeypoints {
  std::vector<Keypoint> keypoints;
  std::vector<Descriptor> descriptors;  ///< parallel to keypoints
  /// Indices (into the requested keypoint list) whose window fell mostly outside the image.
  std::vector<std::size_t> skipped;
};

constexpr int kMinFeatureImageSide = 32;

/// DoG extrema with sub-pixel refinement, contrast and edge rejection and dominant
/// orientations. Sorted by response (desc), then y, x, orientation. Throws
/// InvalidInput for images smaller than 32x32 or with more than one channel.
std::vector<Keypoint> detect_keypoints(const Image& gray, const SiftParams& params = {});

/// 4x4x8 gradient histograms, normalized, clipped at 0.2 and renormalized.
DescribedKeypoints compute_descriptors(const Image& gray, std::span<const Keypoint> keypoints,
                                       const SiftParams& params = {});

/// Detection and description sharing a single scale-space build.
DescribedKeypoints detect_and_describe(const Image& gray, const SiftParams& params = {});

/// CSV dump (x,y,scale,orientation,response) for debugging.
std::string keypoints_to_csv(std::span<const Keypoint> keypoints);

}  // namespace dsrf::features
