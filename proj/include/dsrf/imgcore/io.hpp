#pragma once

#include <filesystem>

#include "dsrf/imgcore/bayer.hpp"
#include "dsrf/imgcore/image.hpp"

namespace dsrf::io {

/// Reads PNG (8/16-bit gray, gray+alpha, RGB, RGBA) or binary PGM/PPM (P5/P6, maxval up
/// to 65535). Alpha is dropped. Throws dsrf::Error on I/O or format problems.
Image read_image(const std::filesystem::path& path);

/// Writes gray or RGB PNG at 8 or 16 bits per sample; values are clamped to [0,1].
void write_png(const std::filesystem::path& path, const Image& img, int bit_depth = 8);

/// Writes binary PGM (1 channel) or PPM (3 channels).
void write_pnm(const std::filesystem::path& path, const Image& img, int bit_depth = 8);

/// Dispatches on extension (.png, .pgm, .ppm).
void write_image(const std::filesystem::path& path, const Image& img, int bit_depth = 8);

/// RAW mosaic stored as a 16-bit PGM plus a JSON sidecar `<path>.json` holding
/// {"pattern": "RGGB", "black_level": N}.
BayerRaw read_raw(const std::filesystem::path& path);
void write_raw(const std::filesystem::path& path, const BayerRaw& raw);

}  // namespace dsrf::io
