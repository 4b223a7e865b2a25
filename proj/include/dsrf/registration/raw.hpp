#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dsrf/imgcore/bayer.hpp"
#include "dsrf/registration/pipeline.hpp"

namespace dsrf::registration {

struct RawPatch {
  int patch_index = 0;
  int frame = 0;
  Image packed;  ///< 4 x (p/2) x (p/2)
  BayerPattern pattern = BayerPattern::RGGB;
  int black_level = 0;
};

struct RawRegistration {
  std::vector<RawPatch> patches;
  std::vector<std::string> skipped;  ///< one entry per frame that could not be used
};

/// RGB pixel-grid transform expressed on the half-resolution packed grid: S(1/2) h S(2).
Homography to_packed(const Homography& rgb);

/// Warps the packed mosaic of `raw` with an RGB-frame transform (original LR -> output grid).
Image align_packed(const BayerRaw& raw, const Homography& rgb_transform, int out_h, int out_w);

/// Applies each patch's transform (estimated on the first RGB frame) to every RAW frame.
/// Patch sides must be even.
RawRegistration register_raw(std::span<const BayerRaw> burst, const RegisteredPair& pair,
                             std::span<const PatchPair> patches);

/// File variant: missing or unreadable RAW frames are skipped and reported.
RawRegistration register_raw(const std::vector<std::filesystem::path>& raw_paths, const RegisteredPair& pair,
                             std::span<const PatchPair> patches);

}  // namespace dsrf::registration
