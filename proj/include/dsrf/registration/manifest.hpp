#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dsrf/core/error.hpp"
#include "dsrf/geometry/homography.hpp"
#include "dsrf/imgcore/image.hpp"

namespace dsrf::registration {

inline constexpr std::array<int, 10> kAltitudes{10, 20, 30, 40, 50, 70, 80, 100, 120, 140};
inline constexpr int kBurstLength = 7;

bool valid_altitude(int altitude);

enum class Split { train, val, test };
std::string to_string(Split s);
Split parse_split(const std::string& s);

struct ScenePair {
  std::string scene_id;
  int altitude = 0;
  std::filesystem::path hr_path;
  std::vector<std::filesystem::path> lr_burst_paths;
  std::vector<std::filesystem::path> raw_paths;  ///< optional
  Split split = Split::train;
  /// Known original-LR -> HR transform (synthetic data only).
  std::optional<geometry::Homography> truth_lr_to_hr;
  /// HR regions whose LR content was deliberately corrupted (synthetic data only).
  std::vector<Rect> corrupted_hr_rects;
  int line = 0;
};

class ManifestError : public InvalidInput {
 public:
  ManifestError(int line, const std::string& msg)
      : InvalidInput("manifest line " + std::to_string(line) + ": " + msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// JSON-lines manifest. Relative paths resolve against base_dir. Blank lines are skipped.
/// Validates the altitude set, burst length and per-scene split consistency.
std::vector<ScenePair> parse_manifest(std::istream& in, const std::filesystem::path& base_dir = {});
std::vector<ScenePair> read_manifest(const std::filesystem::path& path);

std::string manifest_line(const ScenePair& scene);
void write_manifest(const std::filesystem::path& path, const std::vector<ScenePair>& scenes);

}  // namespace dsrf::registration
