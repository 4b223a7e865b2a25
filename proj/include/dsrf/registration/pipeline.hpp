#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "dsrf/core/error.hpp"
#include "dsrf/features/sift.hpp"
#include "dsrf/geometry/homography.hpp"
#include "dsrf/geometry/ransac.hpp"
#include "dsrf/imgcore/image.hpp"

namespace dsrf::registration {

using geometry::Homography;

struct FailureDiagnostics {
  std::string stage;
  int lr_keypoints = 0;
  int hr_keypoints = 0;
  int matches = 0;
  int inliers = 0;
};

class RegistrationFailure : public Error {
 public:
  RegistrationFailure(const std::string& what, FailureDiagnostics diag)
      : Error(what), diagnostics_(std::move(diag)) {}
  const FailureDiagnostics& diagnostics() const { return diagnostics_; }

 private:
  FailureDiagnostics diagnostics_;
};

struct PipelineConfig {
  int fov_width = 720;
  int fov_height = 540;
  int patch = 180;
  int stride = 180;
  double ncc_thresh = 0.9;
  double match_ratio = 0.75;
  int min_matches = 20;
  /// RANSAC threshold in HR pixels.
  double ransac_thresh = 3.0;
  int ransac_iters = 2000;
  /// Extra HR pixels around each patch searched during refinement.
  int search_margin = 50;
  /// LR pixels kept around the FOV crop so patches can be resampled near its border.
  int source_margin = 8;
  bool color_correct = true;
  /// Transfer blur at 720-wide FOV scale; scaled with fov_width.
  double transfer_sigma = 15.0;
  int min_local_inliers = 12;
  /// Detector contrast threshold for patch refinement; upsampled LR patches have weak
  /// DoG responses.
  double local_contrast_threshold = 0.005;
  /// Strongest keypoints kept per image during patch refinement.
  int local_max_keypoints = 1000;
  /// Larger local corrections (HR px at patch corners) are treated as failures.
  double max_local_correction = 25.0;
  /// The local fit replaces the global transform only when its cross-validated error is
  /// below this fraction of the global error on the same inliers.
  double local_gain = 0.5;
  /// Require hr_width * 9 == fov_width * 50.
  bool require_exact_scale = true;
  features::SiftParams sift;
  std::uint64_t seed = 0;

  void validate() const;
};

struct RegisteredPair {
  Image lr_fov;
  Image hr;
  /// lr_fov coordinates -> HR coordinates.
  Homography fov_homography;
  bool color_corrected = false;

  /// LR crop (FOV rectangle plus margin) that patches are resampled from.
  Image lr_source;
  Rect fov_rect;     ///< in the original LR frame
  Rect source_rect;  ///< in the original LR frame
  Homography fov_to_source;
  Homography source_to_hr;
  /// Original LR frame -> HR, as estimated by RANSAC.
  Homography lr_to_hr;
  int n_matches = 0;
  int n_inliers = 0;
};

struct PatchPair {
  Image lr_patch;
  Image hr_patch;
  /// Correction applied on top of the global transform, in HR-patch coordinates.
  Homography local_homography;
  double ncc = 0.0;
  bool valid = false;
  bool fallback = false;
  int local_inliers = 0;
  /// Mean cross-validated error of the local fit and mean error of the global transform on
  /// the local inliers (HR px); infinite when not computed.
  double local_residual = std::numeric_limits<double>::infinity();
  double global_residual = std::numeric_limits<double>::infinity();

  int index = 0;
  Rect lr_rect;  ///< in lr_fov
  Rect hr_rect;  ///< in hr
  /// Refined map from the original LR frame to HR.
  Homography lr_to_hr;
  /// lr_source -> lr_patch pixel grid.
  Homography source_to_patch;
};

/// HR width over FOV width is exactly 50/9 (integer check).
bool scale_is_exact(int fov_width, int hr_width);

/// FOV matching: luminance SIFT between the LR frame and the HR frame resampled to the
/// FOV grid, RANSAC homography, bounding box of the back-projected HR extent cropped and
/// nearest-resized to the FOV size, then color correction against the HR.
/// Throws RegistrationFailure on too few matches or RANSAC failure.
RegisteredPair match_fov(const Image& lr, const Image& hr, const PipelineConfig& cfg = {});

/// Per-patch homography refinement between the bicubic-upsampled LR patch and the HR
/// region around it; falls back to the global transform when local estimation fails.
PatchPair refine_patch_alignment(const RegisteredPair& pair, int patch_x, int patch_y,
                                 const PipelineConfig& cfg = {});

/// NCC between luma of the bicubic-upsampled LR patch and the HR patch; sets valid.
/// Zero variance yields ncc = 0 (invalid).
PatchPair validate_pair(PatchPair pp, double ncc_thresh = 0.9);

/// Raster-order grid of refined and validated patches.
std::vector<PatchPair> extract_patches(const RegisteredPair& pair, const PipelineConfig& cfg = {});

/// Mean distance (HR px) between est(truth^-1(q)) and q over the corners and center of rect.
double alignment_error(const Homography& est_lr_to_hr, const Homography& truth_lr_to_hr, const Rect& hr_rect);

/// Patch origins on the grid in lr_fov coordinates (raster order).
std::vector<std::pair<int, int>> patch_grid(int fov_width, int fov_height, int patch, int stride);

}  // namespace dsrf::registration
