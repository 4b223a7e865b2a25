#include "dsrf/cli/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>

#include "dsrf/core/error.hpp"
#include "dsrf/geometry/warp.hpp"
#include "dsrf/imgcore/bayer.hpp"
#include "dsrf/imgcore/filter.hpp"
#include "dsrf/imgcore/io.hpp"
#include "dsrf/imgcore/resample.hpp"

namespace dsrf::synth {

namespace fs = std::filesystem;
using geometry::Homography;

namespace {

std::mt19937_64 pair_rng(std::uint64_t seed, int scene, int altitude) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(scene), static_cast<std::uint32_t>(altitude)};
  return std::mt19937_64(seq);
}

double plane_std(std::span<const float> p) {
  double s = 0.0, s2 = 0.0;
  for (float v : p) {
    s += v;
    s2 += static_cast<double>(v) * v;
  }
  const double n = static_cast<double>(p.size());
  return std::sqrt(std::max(0.0, s2 / n - (s / n) * (s / n)));
}

// Adds `count` color steps across random lines.
void add_edges(Image& img, int count, double amplitude, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int e = 0; e < count; ++e) {
    const double px = u(rng) * img.width(), py = u(rng) * img.height();
    const double ang = u(rng) * 2.0 * M_PI;
    const double nx = std::cos(ang), ny = std::sin(ang);
    double delta[3];
    for (double& d : delta) d = (u(rng) * 2.0 - 1.0) * amplitude;
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) {
        if ((x + 0.5 - px) * nx + (y + 0.5 - py) * ny < 0.0) continue;
        for (int c = 0; c < img.channels(); ++c) img.at(c, y, x) += static_cast<float>(delta[c % 3]);
      }
    }
  }
}

Homography jitter_homography(const SceneSpec& spec, int w, int h, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double theta = u(rng) * spec.jitter_rotation_deg * M_PI / 180.0;
  const double tx = u(rng) * spec.jitter_shift, ty = u(rng) * spec.jitter_shift;
  const double cx = w / 2.0, cy = h / 2.0;
  std::vector<geometry::Correspondence> corr;
  for (auto [x, y] : {std::pair{0.0, 0.0}, {double(w), 0.0}, {double(w), double(h)}, {0.0, double(h)}}) {
    const double rx = std::cos(theta) * (x - cx) - std::sin(theta) * (y - cy) + cx + tx;
    const double ry = std::sin(theta) * (x - cx) + std::cos(theta) * (y - cy) + cy + ty;
    corr.push_back({{x, y}, {rx + u(rng) * spec.jitter_perspective, ry + u(rng) * spec.jitter_perspective}});
  }
  return geometry::estimate_homography_dlt(corr);
}

nlohmann::json homography_json(const Homography& h) { return h.matrix(); }

}  // namespace

double BlurModel::sigma(double altitude_m) const {
  return sigma_low + (sigma_high - sigma_low) * (altitude_m - 10.0) / 130.0;
}

Image octave_texture(int height, int width, const std::vector<double>& scales, double amplitude,
                     std::mt19937_64& rng) {
  if (height <= 0 || width <= 0) throw InvalidInput("octave_texture: empty size");
  Image out(3, height, width, 0.5f);
  std::normal_distribution<double> nd(0.0, 0.12);
  for (double s : scales) {
    if (!(s >= 1.0)) throw InvalidInput("octave_texture: scales must be >= 1");
    const int lh = static_cast<int>(std::ceil(height / s)) + 2;
    const int lw = static_cast<int>(std::ceil(width / s)) + 2;
    Image noise(3, lh, lw);
    for (int y = 0; y < lh; ++y) {
      for (int x = 0; x < lw; ++x) {
        const double common = nd(rng);
        for (int c = 0; c < 3; ++c) noise.at(c, y, x) = static_cast<float>(0.5 + common + 0.5 * nd(rng));
      }
    }
    noise = gaussian_blur(noise, 0.8);
    const int uh = std::max(height, static_cast<int>(std::lround(lh * s)));
    const int uw = std::max(width, static_cast<int>(std::lround(lw * s)));
    const Image up = s > 1.0 ? resize_bicubic(noise, uh, uw) : noise;
    double sd = 0.0;
    for (int c = 0; c < 3; ++c) sd += plane_std(up.plane(c)) / 3.0;
    const double gain = sd > 0.0 ? amplitude / sd : 0.0;
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) out.at(c, y, x) += static_cast<float>((up.at(c, y, x) - 0.5) * gain);
      }
    }
  }
  out.clamp01();
  return out;
}

void SceneSpec::validate() const {
  if (scenes <= 0) throw InvalidInput("synth: scenes must be positive");
  if (hr_width <= 0 || hr_height <= 0 || hr_width % 50 != 0 || hr_height % 50 != 0) {
    throw InvalidInput("synth: HR size must be a positive multiple of 50");
  }
  for (int a : altitudes) {
    if (!registration::valid_altitude(a)) throw InvalidInput("synth: altitude " + std::to_string(a) + " not in the altitude set");
  }
  if (burst <= 0) throw InvalidInput("synth: burst must be positive");
  if (bit_depth != 8 && bit_depth != 16) throw InvalidInput("synth: bit depth must be 8 or 16");
  if (blur.sigma_low < 0.0 || blur.sigma_high < 0.0) throw InvalidInput("synth: blur sigma must be non-negative");
}

RenderedPair render_pair(const SceneSpec& spec, int scene, int altitude) {
  spec.validate();
  auto rng = pair_rng(spec.seed, scene, altitude);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  const int margin = 25 * static_cast<int>(std::ceil(0.075 * spec.hr_width / 25.0));
  const int ww = spec.hr_width + 2 * margin, wh = spec.hr_height + 2 * margin;
  const double k = spec.hr_width / 2000.0;
  Image world = octave_texture(wh, ww, {8 * k, 16 * k, 32 * k, 64 * k}, 0.09, rng);

  RenderedPair out;
  out.hr = crop(world, {margin, margin, spec.hr_width, spec.hr_height});
  out.blur_sigma = spec.blur.sigma(altitude);
  const int lw = ww * 9 / 50, lh = wh * 9 / 50;
  const Image world_lr = resize_bicubic(gaussian_blur(world, out.blur_sigma), lh, lw);
  world = Image();

  const Homography jitter = jitter_homography(spec, lw, lh, rng);
  Image lr = geometry::warp_image(world_lr, jitter, lh, lw).image;
  out.truth_lr_to_hr =
      Homography::translation(-margin, -margin) * Homography::scaling(50.0 / 9.0) * jitter.inverse();

  double gain[3][3];
  for (auto& g : gain) {
    for (double& v : g) v = (2.0 * u(rng) - 1.0) * spec.color_drift;
  }
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < lh; ++y) {
      for (int x = 0; x < lw; ++x) {
        const double g = 1.0 + gain[c][0] + gain[c][1] * ((x + 0.5) / lw - 0.5) + gain[c][2] * ((y + 0.5) / lh - 0.5);
        lr.at(c, y, x) = static_cast<float>(lr.at(c, y, x) * g);
      }
    }
  }

  if (u(rng) < spec.corrupt_fraction) {
    const int side = spec.hr_width / 5;
    const Rect rect{static_cast<int>(u(rng) * (spec.hr_width - side)), static_cast<int>(u(rng) * (spec.hr_height - side)),
                    side, side};
    const Image other = octave_texture(lh, lw, {1.5, 3.0, 6.0}, 0.12, rng);
    for (int y = 0; y < lh; ++y) {
      for (int x = 0; x < lw; ++x) {
        const auto q = out.truth_lr_to_hr.apply({x + 0.5, y + 0.5});
        if (q.x < rect.x || q.x >= rect.x + rect.width || q.y < rect.y || q.y >= rect.y + rect.height) continue;
        for (int c = 0; c < 3; ++c) lr.at(c, y, x) = other.at(c, y, x);
      }
    }
    out.corrupted_hr_rects.push_back(rect);
  }

  std::normal_distribution<double> noise(0.0, spec.noise_sigma);
  for (int f = 0; f < spec.burst; ++f) {
    Image frame = lr;
    if (spec.noise_sigma > 0.0) {
      for (float& v : frame.data()) v = static_cast<float>(v + noise(rng));
    }
    frame.clamp01();
    out.lr_burst.push_back(std::move(frame));
  }
  return out;
}

std::vector<registration::ScenePair> write_dataset(const SceneSpec& spec, const fs::path& out) {
  spec.validate();
  fs::create_directories(out);
  std::vector<registration::ScenePair> manifest;
  nlohmann::json truth;
  truth["hr_width"] = spec.hr_width;
  truth["hr_height"] = spec.hr_height;
  truth["seed"] = spec.seed;
  nlohmann::json sigmas = nlohmann::json::object();
  for (int a : spec.altitudes) sigmas[std::to_string(a)] = spec.blur.sigma(a);
  truth["blur_sigma_hr_px"] = sigmas;
  truth["pairs"] = nlohmann::json::array();

  for (int s = 0; s < spec.scenes; ++s) {
    char id[32];
    std::snprintf(id, sizeof id, "scene_%02d", s);
    const double frac = static_cast<double>(s) / spec.scenes;
    const registration::Split split =
        frac < 0.7 ? registration::Split::train : (frac < 0.8 ? registration::Split::val : registration::Split::test);
    for (int alt : spec.altitudes) {
      const RenderedPair rp = render_pair(spec, s, alt);
      char sub[64];
      std::snprintf(sub, sizeof sub, "%s/%03d", id, alt);
      const fs::path dir = out / sub;
      fs::create_directories(dir);
      registration::ScenePair sp;
      sp.scene_id = id;
      sp.altitude = alt;
      sp.split = split;
      sp.hr_path = fs::path(sub) / "hr.png";
      io::write_png(out / sp.hr_path, rp.hr, spec.bit_depth);
      for (int f = 0; f < spec.burst; ++f) {
        const fs::path rel = fs::path(sub) / ("lr_" + std::to_string(f) + ".png");
        io::write_png(out / rel, rp.lr_burst[f], spec.bit_depth);
        sp.lr_burst_paths.push_back(rel);
        if (spec.raw) {
          const fs::path raw_rel = fs::path(sub) / ("raw_" + std::to_string(f) + ".pgm");
          io::write_raw(out / raw_rel, mosaic(rp.lr_burst[f], BayerPattern::RGGB));
          sp.raw_paths.push_back(raw_rel);
        }
      }
      sp.truth_lr_to_hr = rp.truth_lr_to_hr;
      sp.corrupted_hr_rects = rp.corrupted_hr_rects;
      nlohmann::json entry;
      entry["scene_id"] = id;
      entry["altitude"] = alt;
      entry["blur_sigma_hr_px"] = rp.blur_sigma;
      entry["truth_lr_to_hr"] = homography_json(rp.truth_lr_to_hr);
      entry["corrupted_hr_rects"] = nlohmann::json::array();
      for (const Rect& r : rp.corrupted_hr_rects) entry["corrupted_hr_rects"].push_back({r.x, r.y, r.width, r.height});
      truth["pairs"].push_back(entry);
      manifest.push_back(std::move(sp));
    }
  }
  // Paths in the manifest are relative to its directory.
  registration::write_manifest(out / "manifest.jsonl", manifest);
  std::ofstream(out / "truth.json") << truth.dump(2) << "\n";
  return manifest;
}

std::vector<aanet::SrSample> make_sr_samples(const SrSpec& spec) {
  if (spec.lr_size <= 0 || spec.count_per_altitude <= 0) throw InvalidInput("sr samples: sizes must be positive");
  if (spec.lr_size % 9 != 0) throw InvalidInput("sr samples: LR size must be a multiple of 9");
  const int hr_size = spec.lr_size * 50 / 9;
  std::vector<aanet::SrSample> out;
  for (int alt : spec.altitudes) {
    std::mt19937_64 rng = pair_rng(spec.seed, -1, alt);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    const double sigma = spec.blur.sigma(alt);
    for (int i = 0; i < spec.count_per_altitude; ++i) {
      Image hr = octave_texture(hr_size, hr_size, {2.0, 4.0, 8.0, 16.0}, 0.04 + 0.06 * u(rng), rng);
      add_edges(hr, 1 + static_cast<int>(u(rng) * 3), 0.25, rng);
      hr.clamp01();
      Image lr = resize_bicubic(gaussian_blur(hr, sigma), spec.lr_size, spec.lr_size);
      if (spec.noise_sigma > 0.0) {
        for (float& v : lr.data()) v = static_cast<float>(v + noise(rng));
        lr.clamp01();
      }
      out.push_back({std::move(lr), std::move(hr), static_cast<double>(alt)});
    }
  }
  return out;
}

}  // namespace dsrf::synth
