#pragma once

#include "dsrf/registration/pipeline.hpp"

namespace dsrf::registration {

struct ErrorMapOptions {
  /// Edge pixels: Sobel magnitude of HR luma at least this fraction of its maximum.
  double edge_fraction = 0.25;
  /// Error within this many pixels of an edge counts as edge error.
  int edge_radius = 3;
  /// Pre-smoothing for the residual shift estimate.
  double shift_sigma = 2.0;
  /// Residual shift (px) above which the pair is flagged as misaligned.
  double misalignment_px = 1.0;
};

struct ErrorMapSummary {
  double mean_error = 0.0;
  /// Fraction of the absolute-error mass lying within edge_radius of an HR edge.
  double edge_concentration = 0.0;
  /// Least-squares shift of the upsampled LR relative to HR around edges; zero for a
  /// symmetric (blur-only) error profile.
  double shift_x = 0.0;
  double shift_y = 0.0;
  bool misaligned = false;
};

struct ErrorMapReport {
  Image map;  ///< mean-over-channels |hr - upsampled lr|
  ErrorMapSummary summary;
};

/// Error map between an HR patch and an LR patch upsampled to its size.
ErrorMapReport error_map(const Image& hr, const Image& upsampled_lr, const ErrorMapOptions& opts = {});

/// error_map on a patch pair, upsampling lr_patch with bicubic.
ErrorMapReport error_map_report(const PatchPair& pp, const ErrorMapOptions& opts = {});

}  // namespace dsrf::registration
