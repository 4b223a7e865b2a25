#include "dsrf/registration/raw.hpp"

#include "dsrf/geometry/warp.hpp"
#include "dsrf/imgcore/io.hpp"

namespace dsrf::registration {

namespace {

Homography original_to_patch(const RegisteredPair& pair, const PatchPair& pp) {
  return pp.source_to_patch * Homography::translation(-pair.source_rect.x, -pair.source_rect.y);
}

void add_frame(RawRegistration& out, const BayerRaw& raw, int frame, const RegisteredPair& pair,
               std::span<const PatchPair> patches) {
  if (raw.width % 2 != 0 || raw.height % 2 != 0) {
    out.skipped.push_back("frame " + std::to_string(frame) + ": odd RAW dimensions");
    return;
  }
  const Image packed = pack_bayer(raw);
  for (const auto& pp : patches) {
    const int side = pp.lr_patch.width();
    if (side % 2 != 0) throw InvalidInput("register_raw: patch side must be even");
    const Homography h = to_packed(original_to_patch(pair, pp));
    RawPatch rp;
    rp.patch_index = pp.index;
    rp.frame = frame;
    rp.packed = geometry::warp_image(packed, h, side / 2, side / 2).image;
    rp.pattern = raw.pattern;
    rp.black_level = raw.black_level;
    out.patches.push_back(std::move(rp));
  }
}

}  // namespace

Homography to_packed(const Homography& rgb) {
  return Homography::scaling(0.5) * rgb * Homography::scaling(2.0);
}

Image align_packed(const BayerRaw& raw, const Homography& rgb_transform, int out_h, int out_w) {
  return geometry::warp_image(pack_bayer(raw), to_packed(rgb_transform), out_h, out_w).image;
}

RawRegistration register_raw(std::span<const BayerRaw> burst, const RegisteredPair& pair,
                             std::span<const PatchPair> patches) {
  RawRegistration out;
  if (burst.empty()) {
    out.skipped.push_back("no RAW frames");
    return out;
  }
  for (std::size_t f = 0; f < burst.size(); ++f) add_frame(out, burst[f], static_cast<int>(f), pair, patches);
  return out;
}

RawRegistration register_raw(const std::vector<std::filesystem::path>& raw_paths, const RegisteredPair& pair,
                             std::span<const PatchPair> patches) {
  RawRegistration out;
  if (raw_paths.empty()) {
    out.skipped.push_back("no RAW frames");
    return out;
  }
  for (std::size_t f = 0; f < raw_paths.size(); ++f) {
    BayerRaw raw;
    try {
      raw = io::read_raw(raw_paths[f]);
    } catch (const Error& e) {
      out.skipped.push_back("frame " + std::to_string(f) + ": " + e.what());
      continue;
    }
    add_frame(out, raw, static_cast<int>(f), pair, patches);
  }
  return out;
}

}  // namespace dsrf::registration
