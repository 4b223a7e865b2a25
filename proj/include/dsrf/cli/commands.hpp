#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dsrf/aanet/train.hpp"
#include "dsrf/registration/manifest.hpp"
#include "dsrf/registration/pipeline.hpp"
#include "dsrf/registration/report.hpp"

namespace dsrf::cli {

enum ExitCode : int { kOk = 0, kInputError = 2, kPairingError = 3, kConfigMismatch = 4 };

/// Outcome of registering one manifest entry.
struct SceneResult {
  const registration::ScenePair* scene = nullptr;
  bool failed = false;
  std::string failure;
  std::optional<registration::RegisteredPair> pair;
  std::vector<registration::PatchPair> patches;
  /// Per-patch residual alignment error (HR px), when ground truth exists.
  std::vector<std::optional<double>> alignment_errors;
  /// Per-patch flag: the HR patch overlaps a corrupted region.
  std::vector<bool> corrupted;
};

/// match_fov + extract_patches on the first burst frame, scored against the scene's
/// ground truth when present. Registration failures are captured, not thrown; I/O errors
/// propagate.
SceneResult register_scene(const registration::ScenePair& scene, const registration::PipelineConfig& cfg);

/// Parses "WxH".
std::pair<int, int> parse_size(const std::string& s);

/// SR sample directory layout: <root>/<split>/.../<altitude>/{lr_K,hr_K}.png. The
/// altitude is the integer name of the parent directory. Throws InvalidInput when an
/// hr_ file has no lr_ sibling or the parent is not an altitude.
struct SampleSet {
  std::vector<aanet::SrSample> samples;
  std::vector<std::string> splits;  ///< parallel to samples
  std::vector<std::filesystem::path> rel_paths;
};
SampleSet load_samples(const std::filesystem::path& root);

/// Command-line entry point; returns the process exit code.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args);

}  // namespace dsrf::cli
