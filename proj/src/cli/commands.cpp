#include "dsrf/cli/commands.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "dsrf/aanet/checkpoint.hpp"
#include "dsrf/analysis/kernel.hpp"
#include "dsrf/analysis/psd.hpp"
#include "dsrf/cli/svg.hpp"
#include "dsrf/cli/synth.hpp"
#include "dsrf/imgcore/bayer.hpp"
#include "dsrf/imgcore/io.hpp"
#include "dsrf/imgcore/resample.hpp"
#include "dsrf/metrics/metrics.hpp"
#include "dsrf/registration/error_map.hpp"
#include "dsrf/registration/raw.hpp"

namespace dsrf::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using registration::PipelineConfig;
using registration::ScenePair;

namespace {

std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> log = [] {
    auto l = spdlog::get("dsrf");
    if (!l) l = spdlog::stderr_color_mt("dsrf");
    const char* env = std::getenv("DSRF_LOG");
    l->set_level(env ? spdlog::level::from_str(env) : spdlog::level::info);
    return l;
  }();
  return log;
}

json homography_json(const geometry::Homography& h) { return h.matrix(); }
json rect_json(const Rect& r) { return {r.x, r.y, r.width, r.height}; }

bool overlaps(const Rect& a, const Rect& b) {
  return a.x < b.x + b.width && b.x < a.x + a.width && a.y < b.y + b.height && b.y < a.y + a.height;
}

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  jobs = std::clamp(jobs, 1, std::max(1, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex mu;
  for (int t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// Written under the subcommand's section so `dsrf --config run_config.ini <command>` replays it.
void write_run_config(const CLI::App& sub, const fs::path& dir) {
  std::string section = sub.get_name();
  for (const CLI::App* p = sub.get_parent(); p != nullptr && p->get_parent() != nullptr; p = p->get_parent()) {
    section = p->get_name() + "." + section;
  }
  // unset options are left out so replaying them keeps their defaults
  std::istringstream lines(sub.config_to_str(true, true));
  std::ostringstream kept;
  for (std::string line; std::getline(lines, line);) {
    if (line.size() < 3 || line.compare(line.size() - 3, 3, "=\"\"") != 0) kept << line << "\n";
  }
  fs::create_directories(dir);
  std::ofstream(dir / "run_config.ini") << "[" << section << "]\n" << kept.str();
}

std::optional<int> altitude_from_dir(const fs::path& file) {
  const std::string name = file.parent_path().filename().string();
  if (name.empty() || !std::all_of(name.begin(), name.end(), [](unsigned char c) { return std::isdigit(c); })) {
    return std::nullopt;
  }
  return std::stoi(name);
}

std::string with_prefix(const fs::path& file, const std::string& from, const std::string& to) {
  const std::string name = file.filename().string();
  if (name.rfind(from, 0) != 0) return name;
  return to + name.substr(from.size());
}

std::vector<fs::path> sorted_files(const fs::path& root, const std::string& prefix, const std::string& ext) {
  std::vector<fs::path> out;
  if (fs::is_regular_file(root)) return {root};
  if (!fs::is_directory(root)) throw InvalidInput("not a file or directory: " + root.string());
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const std::string name = e.path().filename().string();
    if (name.rfind(prefix, 0) == 0 && e.path().extension() == ext) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---- register ----------------------------------------------------------------------

struct RegisterOptions {
  std::string manifest, out, fov = "720x540";
  double ncc_thresh = 0.9;
  int patch = 180, stride = 180, jobs = 1;
  std::uint64_t seed = 0;
  std::vector<int> altitudes;
  bool no_color = false, allow_inexact = false, no_images = false;
  double ransac_thresh = 3.0;
  int search_margin = 50;
};

registration::ValidationReport register_one(const ScenePair& scene, const PipelineConfig& cfg, const fs::path& out,
                                            bool write_images) {
  registration::ValidationReport report;
  SceneResult r;
  try {
    r = register_scene(scene, cfg);
  } catch (const Error& e) {
    r.failed = true;
    r.failure = e.what();
  }
  if (r.failed) {
    logger()->warn("{} @ {} m: {}", scene.scene_id, scene.altitude, r.failure);
    report.add_failure(scene.split, scene.altitude);
    return report;
  }
  const fs::path dir = out / to_string(scene.split) / scene.scene_id / std::to_string(scene.altitude);
  fs::create_directories(dir);
  std::vector<registration::PatchPair> valid;
  for (std::size_t i = 0; i < r.patches.size(); ++i) {
    const auto& pp = r.patches[i];
    report.add_patch(scene.split, scene.altitude, pp, r.alignment_errors[i]);
    char tag[16];
    std::snprintf(tag, sizeof tag, "%03d", pp.index);
    json meta{{"index", pp.index},
              {"valid", pp.valid},
              {"ncc", pp.ncc},
              {"fallback", pp.fallback},
              {"local_inliers", pp.local_inliers},
              {"local_residual", std::isfinite(pp.local_residual) ? json(pp.local_residual) : json()},
              {"global_residual", std::isfinite(pp.global_residual) ? json(pp.global_residual) : json()},
              {"lr_rect", rect_json(pp.lr_rect)},
              {"hr_rect", rect_json(pp.hr_rect)},
              {"lr_to_hr", homography_json(pp.lr_to_hr)},
              {"local_homography", homography_json(pp.local_homography)},
              {"color_corrected", r.pair->color_corrected}};
    if (r.alignment_errors[i]) meta["alignment_error"] = *r.alignment_errors[i];
    std::ofstream(dir / ("meta_" + std::string(tag) + ".json")) << meta.dump(2) << "\n";
    if (pp.valid && write_images) {
      io::write_png(dir / ("lr_" + std::string(tag) + ".png"), pp.lr_patch);
      io::write_png(dir / ("hr_" + std::string(tag) + ".png"), pp.hr_patch);
    }
    if (pp.valid) valid.push_back(pp);
  }
  if (!scene.raw_paths.empty() && !valid.empty()) {
    const auto raw = registration::register_raw(scene.raw_paths, *r.pair, valid);
    for (const auto& s : raw.skipped) logger()->warn("{} @ {} m: RAW {}", scene.scene_id, scene.altitude, s);
    if (write_images) {
      for (const auto& rp : raw.patches) {
        char name[48];
        std::snprintf(name, sizeof name, "raw_%03d_f%d.pgm", rp.patch_index, rp.frame);
        io::write_raw(dir / name, unpack_bayer(rp.packed, rp.pattern, rp.black_level));
      }
    }
  }
  logger()->info("{} @ {} m: {} matches, {} inliers, {}/{} patches valid", scene.scene_id, scene.altitude,
                 r.pair->n_matches, r.pair->n_inliers, valid.size(), r.patches.size());
  return report;
}

int cmd_register(const RegisterOptions& o, const CLI::App& sub) {
  std::vector<ScenePair> scenes;
  PipelineConfig cfg;
  try {
    scenes = registration::read_manifest(o.manifest);
    std::tie(cfg.fov_width, cfg.fov_height) = parse_size(o.fov);
    cfg.ncc_thresh = o.ncc_thresh;
    cfg.patch = o.patch;
    cfg.stride = o.stride;
    cfg.seed = o.seed;
    cfg.color_correct = !o.no_color;
    cfg.require_exact_scale = !o.allow_inexact;
    cfg.ransac_thresh = o.ransac_thresh;
    cfg.search_margin = o.search_margin;
    cfg.validate();
  } catch (const Error& e) {
    logger()->error("{}", e.what());
    return kInputError;
  }
  if (!o.altitudes.empty()) {
    std::erase_if(scenes, [&](const ScenePair& s) {
      return std::find(o.altitudes.begin(), o.altitudes.end(), s.altitude) == o.altitudes.end();
    });
  }
  const fs::path out(o.out);
  write_run_config(sub, out);
  std::vector<registration::ValidationReport> reports(scenes.size());
  parallel_for(static_cast<int>(scenes.size()), o.jobs,
               [&](int i) { reports[i] = register_one(scenes[i], cfg, out, !o.no_images); });
  registration::ValidationReport total;
  for (const auto& r : reports) total.merge(r);
  std::ofstream(out / "report.csv") << total.to_csv();
  std::cout << total.to_csv();
  logger()->info("{} scenes, {} candidate patches, {} failed scenes", scenes.size(), total.total_candidates(),
                 total.total_failures());
  return kOk;
}

// ---- synth -------------------------------------------------------------------------

struct SynthOptions {
  std::string out, kind = "scenes", hr = "4000x3000";
  std::uint64_t seed = 0;
  int scenes = 10, sr_count = 32, sr_lr_size = 18;
  std::vector<int> altitudes;
  bool raw = false;
  double noise = 0.003, blur_low = -1.0, blur_high = -1.0, corrupt = 0.3, jitter = 3.0, rotation = 2.0;
  int bit_depth = 8;
};

int cmd_synth(const SynthOptions& o, const CLI::App& sub) {
  const fs::path out(o.out);
  try {
    if (o.kind == "scenes") {
      synth::SceneSpec spec;
      spec.scenes = o.scenes;
      std::tie(spec.hr_width, spec.hr_height) = parse_size(o.hr);
      if (!o.altitudes.empty()) spec.altitudes = o.altitudes;
      spec.raw = o.raw;
      spec.noise_sigma = o.noise;
      if (o.blur_low >= 0.0) spec.blur.sigma_low = o.blur_low;
      if (o.blur_high >= 0.0) spec.blur.sigma_high = o.blur_high;
      spec.corrupt_fraction = o.corrupt;
      spec.jitter_shift = o.jitter;
      spec.jitter_rotation_deg = o.rotation;
      spec.bit_depth = o.bit_depth;
      spec.seed = o.seed;
      spec.validate();
      write_run_config(sub, out);
      const auto manifest = synth::write_dataset(spec, out);
      logger()->info("wrote {} scene pairs to {}", manifest.size(), out.string());
    } else if (o.kind == "sr") {
      synth::SrSpec spec;
      spec.count_per_altitude = o.sr_count;
      spec.lr_size = o.sr_lr_size;
      if (!o.altitudes.empty()) spec.altitudes = o.altitudes;
      if (o.blur_low >= 0.0) spec.blur.sigma_low = o.blur_low;
      if (o.blur_high >= 0.0) spec.blur.sigma_high = o.blur_high;
      spec.noise_sigma = o.noise;
      write_run_config(sub, out);
      json truth;
      for (const auto& [split, offset] : {std::pair{"train", 0ULL}, {"val", 1ULL}}) {
        spec.seed = o.seed * 2 + offset;
        const auto samples = synth::make_sr_samples(spec);
        std::map<int, int> counter;
        for (const auto& s : samples) {
          const int alt = static_cast<int>(s.altitude_m);
          const fs::path dir = out / split / std::to_string(alt);
          fs::create_directories(dir);
          char tag[16];
          std::snprintf(tag, sizeof tag, "%04d", counter[alt]++);
          io::write_png(dir / ("lr_" + std::string(tag) + ".png"), s.lr, 16);
          io::write_png(dir / ("hr_" + std::string(tag) + ".png"), s.hr, 16);
        }
      }
      for (int a : spec.altitudes) truth["blur_sigma_hr_px"][std::to_string(a)] = spec.blur.sigma(a);
      std::ofstream(out / "truth.json") << truth.dump(2) << "\n";
    } else {
      throw InvalidInput("unknown synth kind: " + o.kind);
    }
  } catch (const InvalidInput& e) {
    logger()->error("{}", e.what());
    return kInputError;
  }
  return kOk;
}

// ---- eval --------------------------------------------------------------------------

struct EvalOptions {
  std::string pred, gt, lr, manifest, out, split;
  int shave = metrics::kDefaultShave;
  bool quantize = false;
  std::vector<int> altitudes;
};

struct EvalAccumulator {
  int n = 0, exact = 0, n_base = 0;
  double psnr = 0.0, ssim = 0.0, base_psnr = 0.0, base_ssim = 0.0;
};

std::string eval_csv(const std::map<int, EvalAccumulator>& acc) {
  std::ostringstream o;
  o << "altitude,n_pairs,psnr,ssim,bicubic_psnr,bicubic_ssim,n_exact\n";
  auto f = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return std::string(buf);
  };
  for (const auto& [alt, a] : acc) {
    o << alt << "," << a.n << "," << (a.n ? f(a.psnr / a.n) : "nan") << "," << (a.n ? f(a.ssim / a.n) : "nan") << ","
      << (a.n_base ? f(a.base_psnr / a.n_base) : "nan") << "," << (a.n_base ? f(a.base_ssim / a.n_base) : "nan") << ","
      << a.exact << "\n";
  }
  return o.str();
}

int cmd_eval(const EvalOptions& o, const CLI::App& sub) {
  const metrics::EvalOptions eo{o.shave, o.quantize};
  struct Item {
    int altitude;
    fs::path gt, pred, lr;
  };
  std::vector<Item> items;
  std::vector<std::string> unmatched;
  try {
    if (!o.manifest.empty()) {
      for (const auto& s : registration::read_manifest(o.manifest)) {
        if (!o.split.empty() && to_string(s.split) != o.split) continue;
        Item it{s.altitude, s.hr_path, {}, s.lr_burst_paths.front()};
        if (!o.pred.empty()) {
          it.pred = fs::path(o.pred) / s.scene_id / std::to_string(s.altitude) / "sr.png";
          if (!fs::exists(it.pred)) {
            unmatched.push_back(it.pred.string());
            continue;
          }
        }
        items.push_back(it);
      }
    } else {
      if (o.gt.empty() || o.pred.empty()) throw InvalidInput("eval needs --gt and --pred, or --manifest");
      const fs::path gt_root(o.gt), pred_root(o.pred), lr_root(o.lr.empty() ? o.gt : o.lr);
      std::set<fs::path> used;
      for (const auto& g : sorted_files(gt_root, "hr_", ".png")) {
        const fs::path rel = fs::relative(g, gt_root);
        const auto alt = altitude_from_dir(g);
        if (!alt) throw InvalidInput("cannot infer altitude from " + g.string());
        fs::path pred = pred_root / rel.parent_path() / with_prefix(rel, "hr_", "sr_");
        if (!fs::exists(pred)) pred = pred_root / rel;
        if (!fs::exists(pred)) {
          unmatched.push_back("missing prediction for " + rel.string());
          continue;
        }
        used.insert(fs::weakly_canonical(pred));
        const fs::path lr = lr_root / rel.parent_path() / with_prefix(rel, "hr_", "lr_");
        items.push_back({*alt, g, pred, fs::exists(lr) ? lr : fs::path()});
      }
      for (const auto& p : sorted_files(pred_root, "sr_", ".png")) {
        if (!used.count(fs::weakly_canonical(p))) {
          unmatched.push_back("prediction without ground truth: " + fs::relative(p, pred_root).string());
        }
      }
    }
  } catch (const Error& e) {
    logger()->error("{}", e.what());
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    logger()->error("{}", e.what());
    return kInputError;
  }
  if (!o.altitudes.empty()) {
    std::erase_if(items, [&](const Item& it) {
      return std::find(o.altitudes.begin(), o.altitudes.end(), it.altitude) == o.altitudes.end();
    });
  }

  std::map<int, EvalAccumulator> acc;
  try {
    for (const auto& it : items) {
      const Image gt = io::read_image(it.gt);
      auto& a = acc[it.altitude];
      if (!it.pred.empty()) {
        const Image pred = io::read_image(it.pred);
        if (!pred.same_shape(gt)) {
          unmatched.push_back("shape mismatch: " + it.pred.string());
          continue;
        }
        const auto p = metrics::psnr_y(pred, gt, eo);
        a.psnr += p.db;
        a.ssim += metrics::ssim_y(pred, gt, eo);
        a.exact += p.exact_match ? 1 : 0;
        ++a.n;
      }
      if (!it.lr.empty()) {
        const Image up = resize_bicubic(io::read_image(it.lr), gt.height(), gt.width());
        a.base_psnr += metrics::psnr_y(up, gt, eo).db;
        a.base_ssim += metrics::ssim_y(up, gt, eo);
        ++a.n_base;
      }
    }
  } catch (const Error& e) {
    logger()->error("{}", e.what());
    return kInputError;
  }
  const std::string csv = eval_csv(acc);
  if (!o.out.empty()) {
    const fs::path out(o.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    std::ofstream(out) << csv;
    write_run_config(sub, out.has_parent_path() ? out.parent_path() : fs::path("."));
  }
  std::cout << csv;
  if (!unmatched.empty()) {
    for (const auto& u : unmatched) logger()->error("unmatched: {}", u);
    return kPairingError;
  }
  return kOk;
}

// ---- analyze -----------------------------------------------------------------------

struct AnalyzeOptions {
  std::string out, manifest, pairs, split;
  std::vector<std::string> images, hr, lr;
  bool crop_by_altitude = false;
  int tile = analysis::kPsdTile, bins = analysis::kPsdBins, support = 21;
  double lambda = 1e-3;
  std::vector<int> altitudes;
};

std::vector<std::pair<fs::path, fs::path>> collect_pairs(const AnalyzeOptions& o) {
  std::vector<std::pair<fs::path, fs::path>> pairs;
  if (!o.pairs.empty()) {
    for (const auto& h : sorted_files(o.pairs, "hr_", ".png")) {
      const fs::path l = h.parent_path() / with_prefix(h, "hr_", "lr_");
      if (fs::exists(l)) pairs.emplace_back(h, l);
    }
  }
  if (o.hr.size() != o.lr.size()) throw InvalidInput("--hr and --lr need the same number of files");
  for (std::size_t i = 0; i < o.hr.size(); ++i) pairs.emplace_back(o.hr[i], o.lr[i]);
  return pairs;
}

int cmd_analyze_psd(const AnalyzeOptions& o, const CLI::App& sub) {
  std::map<std::string, std::vector<Image>> groups;
  std::map<std::string, int> group_alt;
  try {
    for (const auto& f : o.images) groups["images"].push_back(io::read_image(f));
    if (!o.manifest.empty()) {
      for (const auto& s : registration::read_manifest(o.manifest)) {
        if (!o.split.empty() && to_string(s.split) != o.split) continue;
        if (!o.altitudes.empty() && std::find(o.altitudes.begin(), o.altitudes.end(), s.altitude) == o.altitudes.end()) {
          continue;
        }
        char key[16];
        std::snprintf(key, sizeof key, "%03dm", s.altitude);
        groups[key].push_back(io::read_image(s.lr_burst_paths.front()));
        group_alt[key] = s.altitude;
      }
    }
    if (groups.empty()) throw InvalidInput("analyze psd: no input images");
  } catch (const Error& e) {
    logger()->error("{}", e.what());
    return kInputError;
  }
  const fs::path out(o.out);
  fs::create_directories(out);
  write_run_config(sub, out);
  int ref_alt = 0;
  for (const auto& [k, a] : group_alt) ref_alt = ref_alt == 0 ? a : std::min(ref_alt, a);
  std::vector<std::pair<std::string, analysis::RadialPSD>> curves;
  for (const auto& [key, imgs] : groups) {
    analysis::PsdOptions po;
    po.tile = o.tile;
    po.bins = o.bins;
    if (o.crop_by_altitude && group_alt.count(key)) po.crop_fraction = analysis::altitude_crop_fraction(ref_alt, group_alt[key]);
    auto psd = analysis::radial_psd(imgs, po);
    for (const auto& n : psd.notes) logger()->info("psd {}: {}", key, n);
    std::ofstream(out / ("psd_" + key + ".csv")) << psd.to_csv();
    curves.emplace_back(key, std::move(psd));
  }
  std::ofstream(out / "psd.svg") << psd_svg(curves);
  std::ofstream csv(out / "psd.csv");
  csv << "frequency";
  for (const auto& [key, psd] : curves) csv << "," << key;
  csv << "\n";
  for (std::size_t b = 0; b < curves.front().second.frequency.size(); ++b) {
    csv << curves.front().second.frequency[b];
    for (const auto& [key, psd] : curves) csv << "," << psd.log_power[b];
    csv << "\n";
  }
  return kOk;
}

int cmd_analyze_kernel(const AnalyzeOptions& o, const CLI::App& sub) {
  std::vector<analysis::KernelPair> pairs;
  try {
    for (const auto& [h, l] : collect_pairs(o)) pairs.push_back({io::read_image(h), io::read_image(l)});
    if (pairs.empty()) throw InvalidInput("analyze kernel: no input pairs");
  } catch (const Error& e) {
    logger()->error("{}", e.what());
    return kInputError;
  }
  const fs::path out(o.out);
  fs::create_directories(out);
  write_run_config(sub, out);
  const double scale = static_cast<double>(pairs.front().lr.width()) / pairs.front().hr.width();
  const auto k = analysis::estimate_blur_kernel(pairs, {o.support, o.lambda});
  const auto ref = analysis::bicubic_reference_kernel(scale, o.support);
  std::ofstream(out / "kernel.csv") << k.to_csv();
  std::ofstream(out / "bicubic_reference.csv") << ref.to_csv();
  io::write_png(out / "kernel.png", k.to_image(), 16);
  json summary{{"pairs", pairs.size()},
               {"second_moment", k.second_moment()},
               {"bicubic_second_moment", ref.second_moment()},
               {"raw_centroid", {k.raw_centroid_x, k.raw_centroid_y}},
               {"relative_l2_to_bicubic", analysis::BlurKernel::relative_l2(k, ref)}};
  std::ofstream(out / "kernel.json") << summary.dump(2) << "\n";
  std::cout << summary.dump(2) << "\n";
  return kOk;
}

int cmd_analyze_errmap(const AnalyzeOptions& o, const CLI::App& sub) {
  std::vector<std::pair<fs::path, fs::path>> pairs;
  try {
    pairs = collect_pairs(o);
    if (pairs.empty()) throw InvalidInput("analyze errmap: no input pairs");
  } catch (const Error& e) {
    logger()->error("{}", e.what());
    return kInputError;
  }
  const fs::path out(o.out);
  fs::create_directories(out);
  write_run_config(sub, out);
  std::ofstream csv(out / "errmap.csv");
  csv << "hr,lr,mean_error,edge_concentration,shift_x,shift_y,misaligned\n";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    try {
      const Image hr = io::read_image(pairs[i].first);
      const Image lr = io::read_image(pairs[i].second);
      const Image up = resize_bicubic(lr, hr.height(), hr.width());
      const auto rep = registration::error_map(hr, up);
      Image vis = rep.map;
      float peak = 0.0f;
      for (float v : vis.data()) peak = std::max(peak, v);
      if (peak > 0.0f) {
        for (float& v : vis.data()) v /= peak;
      }
      char name[32];
      std::snprintf(name, sizeof name, "errmap_%03zu.png", i);
      io::write_png(out / name, vis);
      const auto& s = rep.summary;
      csv << pairs[i].first.string() << "," << pairs[i].second.string() << "," << s.mean_error << ","
          << s.edge_concentration << "," << s.shift_x << "," << s.shift_y << "," << (s.misaligned ? 1 : 0) << "\n";
      std::cout << pairs[i].first.filename().string() << " edge_concentration=" << s.edge_concentration
                << " shift=(" << s.shift_x << "," << s.shift_y << ")\n";
    } catch (const Error& e) {
      logger()->error("{}", e.what());
      return kInputError;
    }
  }
  return kOk;
}

// ---- train / infer -----------------------------------------------------------------

struct NetOptions {
  int channels = 128, hidden = 8, embed = 64, dal_kernel = 3;
  std::string head = "pre_upsample";
  bool freeze_altitude = false;

  aanet::NetworkConfig config() const {
    aanet::NetworkConfig c;
    c.channels = channels;
    c.hidden_layers = hidden;
    c.embedding_dim = embed;
    c.dal_kernel = dal_kernel;
    c.head = aanet::parse_head(head);
    c.conditioning = freeze_altitude ? aanet::Conditioning::none : aanet::Conditioning::altitude;
    return c;
  }
};

void add_net_options(CLI::App* app, NetOptions& n) {
  app->add_option("--channels", n.channels, "Feature channels")->capture_default_str();
  app->add_option("--hidden", n.hidden, "Hidden convolution layers")->capture_default_str();
  app->add_option("--embed", n.embed, "Altitude embedding size")->capture_default_str();
  app->add_option("--dal-kernel", n.dal_kernel, "Predicted depth-wise kernel size")->capture_default_str();
  app->add_option("--head", n.head, "pre_upsample or upsample")->capture_default_str();
  app->add_flag("--freeze-altitude", n.freeze_altitude, "Constant conditioning code (ablation)");
}

struct TrainOptions {
  NetOptions net;
  std::string data, out, resume;
  bool synthetic = false;
  int steps = 2000, batch = 8, crop = 0, val_every = 100, sr_count = 32, sr_lr_size = 18;
  double lr = 1e-4, blur_low = 1.0, blur_high = 5.0;
  std::uint64_t seed = 0;
  std::vector<int> altitudes;
  int shave = metrics::kDefaultShave;
};

int cmd_train(const TrainOptions& o, const CLI::App& sub) {
  std::vector<aanet::SrSample> train_set, val_set;
  aanet::NetworkConfig cfg;
  try {
    cfg = o.net.config();
    cfg.validate();
    if (o.synthetic) {
      synth::SrSpec spec;
      spec.count_per_altitude = o.sr_count;
      spec.lr_size = o.sr_lr_size;
      spec.blur = {o.blur_low, o.blur_high};
      if (!o.altitudes.empty()) spec.altitudes = o.altitudes;
      spec.seed = o.seed * 2;
      train_set = synth::make_sr_samples(spec);
      spec.seed = o.seed * 2 + 1;
      spec.count_per_altitude = std::max(1, o.sr_count / 4);
      val_set = synth::make_sr_samples(spec);
    } else {
      if (o.data.empty()) throw InvalidInput("train needs --data or --synthetic");
      auto set = load_samples(o.data);
      for (std::size_t i = 0; i < set.samples.size(); ++i) {
        const int alt = static_cast<int>(set.samples[i].altitude_m);
        if (!o.altitudes.empty() && std::find(o.altitudes.begin(), o.altitudes.end(), alt) == o.altitudes.end()) continue;
        (set.splits[i] == "train" ? train_set : val_set).push_back(std::move(set.samples[i]));
      }
    }
    if (train_set.empty()) throw InvalidInput("train: no training samples");
  } catch (const Error& e) {
    logger()->error("{}", e.what());
    return kInputError;
  }
  aanet::AaFcnn net(cfg, o.seed);
  if (!o.resume.empty()) {
    try {
      aanet::load_checkpoint(o.resume, net);
    } catch (const aanet::ConfigMismatch& e) {
      logger()->error("{}", e.what());
      return kConfigMismatch;
    } catch (const Error& e) {
      logger()->error("{}", e.what());
      return kInputError;
    }
  }
  const fs::path out(o.out);
  write_run_config(sub, out);
  aanet::TrainConfig tc;
  tc.steps = o.steps;
  tc.batch = o.batch;
  tc.adam.lr = o.lr;
  tc.crop = o.crop;
  tc.val_every = o.val_every;
  tc.seed = o.seed;
  tc.eval.shave = o.shave;
  std::ofstream metrics_csv(out / "metrics.csv");
  logger()->info("training {} ({} train / {} val samples, {} parameters)", cfg.serialize(), train_set.size(),
                 val_set.size(), net.params().scalar_count());
  try {
    const auto res = aanet::train(net, train_set, val_set, tc, &metrics_csv);
    if (!res.losses.empty()) logger()->info("final loss {:.6f}", res.losses.back());
  } catch (const InvalidInput& e) {
    logger()->error("{}", e.what());
    return kInputError;
  }
  aanet::save_checkpoint(out / "checkpoint.bin", net);
  return kOk;
}

struct InferOptions {
  NetOptions net;
  std::string checkpoint, input, out;
  std::optional<double> altitude;
};

int cmd_infer(const InferOptions& o, const CLI::App& sub) {
  std::unique_ptr<aanet::AaFcnn> net;
  try {
    // Sizes default to the checkpoint's; explicit ones must agree with it.
    aanet::NetworkConfig cfg = aanet::read_checkpoint_config(o.checkpoint);
    if (o.net.channels > 0) cfg.channels = o.net.channels;
    if (o.net.hidden > 0) cfg.hidden_layers = o.net.hidden;
    if (o.net.embed > 0) cfg.embedding_dim = o.net.embed;
    if (o.net.dal_kernel > 0) cfg.dal_kernel = o.net.dal_kernel;
    if (!o.net.head.empty()) cfg.head = aanet::parse_head(o.net.head);
    net = std::make_unique<aanet::AaFcnn>(cfg);
    aanet::load_checkpoint(o.checkpoint, *net);
  } catch (const aanet::ConfigMismatch& e) {
    logger()->error("{}", e.what());
    return kConfigMismatch;
  } catch (const Error& e) {
    logger()->error("{}", e.what());
    return kInputError;
  }
  const fs::path in(o.input), out(o.out);
  std::vector<fs::path> files;
  try {
    files = fs::is_directory(in) ? sorted_files(in, "lr_", ".png") : std::vector<fs::path>{in};
    if (files.empty()) throw InvalidInput("infer: no lr_*.png inputs under " + in.string());
  } catch (const Error& e) {
    logger()->error("{}", e.what());
    return kInputError;
  }
  write_run_config(sub, out);
  const bool frozen = o.net.freeze_altitude || net->config().conditioning == aanet::Conditioning::none;
  for (const auto& f : files) {
    double altitude = 0.0;
    if (o.altitude) {
      altitude = *o.altitude;
    } else if (auto a = altitude_from_dir(f)) {
      altitude = *a;
    } else if (!frozen) {
      logger()->error("no --altitude given and none implied by {}", f.string());
      return kInputError;
    }
    Image lr;
    try {
      lr = io::read_image(f);
    } catch (const Error& e) {
      logger()->error("{}", e.what());
      return kInputError;
    }
    double code = 1.0;
    if (!frozen) {
      try {
        code = aanet::altitude_code(altitude, aanet::Conditioning::altitude);
      } catch (const InvalidInput& e) {
        logger()->error("{}", e.what());
        return kInputError;
      }
    }
    const Image sr = net->infer_with_code(lr, code);
    const fs::path rel = fs::is_directory(in) ? fs::relative(f, in) : f.filename();
    const fs::path target = out / rel.parent_path() / with_prefix(rel, "lr_", "sr_");
    fs::create_directories(target.parent_path());
    io::write_png(target, sr, 16);
    json tag{{"input", f.string()}, {"altitude_m", altitude}, {"frozen", frozen}, {"code", code},
             {"config", net->config().serialize()}};
    std::ofstream(target.string() + ".json") << tag.dump(2) << "\n";
  }
  logger()->info("wrote {} outputs to {}", files.size(), out.string());
  return kOk;
}

}  // namespace

SceneResult register_scene(const ScenePair& scene, const PipelineConfig& cfg) {
  SceneResult r;
  r.scene = &scene;
  if (scene.lr_burst_paths.empty()) throw InvalidInput("scene " + scene.scene_id + " has no LR frames");
  const Image hr = io::read_image(scene.hr_path);
  const Image lr = io::read_image(scene.lr_burst_paths.front());
  try {
    auto pair = registration::match_fov(lr, hr, cfg);
    r.patches = registration::extract_patches(pair, cfg);
    r.pair = std::move(pair);
  } catch (const registration::RegistrationFailure& e) {
    const auto& d = e.diagnostics();
    r.failed = true;
    r.failure = std::string(e.what()) + " (stage " + d.stage + ", keypoints " + std::to_string(d.lr_keypoints) + "/" +
                std::to_string(d.hr_keypoints) + ", matches " + std::to_string(d.matches) + ", inliers " +
                std::to_string(d.inliers) + ")";
    return r;
  } catch (const EstimationFailure& e) {
    r.failed = true;
    r.failure = e.what();
    return r;
  }
  for (const auto& pp : r.patches) {
    std::optional<double> err;
    if (scene.truth_lr_to_hr) err = registration::alignment_error(pp.lr_to_hr, *scene.truth_lr_to_hr, pp.hr_rect);
    r.alignment_errors.push_back(err);
    bool bad = false;
    for (const Rect& c : scene.corrupted_hr_rects) bad = bad || overlaps(c, pp.hr_rect);
    r.corrupted.push_back(bad);
  }
  return r;
}

std::pair<int, int> parse_size(const std::string& s) {
  const auto x = s.find_first_of("xX");
  try {
    if (x == std::string::npos) throw std::invalid_argument(s);
    std::size_t p1 = 0, p2 = 0;
    const int w = std::stoi(s.substr(0, x), &p1);
    const int h = std::stoi(s.substr(x + 1), &p2);
    if (p1 != x || p2 != s.size() - x - 1 || w <= 0 || h <= 0) throw std::invalid_argument(s);
    return {w, h};
  } catch (const std::logic_error&) {
    throw InvalidInput("expected WxH, got '" + s + "'");
  }
}

SampleSet load_samples(const fs::path& root) {
  SampleSet set;
  for (const auto& h : sorted_files(root, "hr_", ".png")) {
    const fs::path l = h.parent_path() / with_prefix(h, "hr_", "lr_");
    if (!fs::exists(l)) throw InvalidInput("no LR sibling for " + h.string());
    const auto alt = altitude_from_dir(h);
    if (!alt) throw InvalidInput("cannot infer altitude from " + h.string());
    const fs::path rel = fs::relative(h, root);
    set.samples.push_back({io::read_image(l), io::read_image(h), static_cast<double>(*alt)});
    set.splits.push_back(rel.begin()->string());
    set.rel_paths.push_back(rel);
  }
  return set;
}

int run(int argc, char** argv) {
  CLI::App app{"Paired LR/HR aerial dataset toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "dsrf 1.0");
  app.set_config("--config", "", "Replay a run_config.ini written by a previous run");

  RegisterOptions ro;
  auto* reg = app.add_subcommand("register", "Register LR/HR pairs from a manifest and extract validated patches");
  reg->add_option("--manifest", ro.manifest, "JSON-lines manifest")->required();
  reg->add_option("--out", ro.out, "Output directory")->required();
  reg->add_option("--ncc-thresh", ro.ncc_thresh, "Patch validity NCC threshold")->capture_default_str();
  reg->add_option("--patch", ro.patch, "LR patch size")->capture_default_str();
  reg->add_option("--stride", ro.stride, "LR patch stride")->capture_default_str();
  reg->add_option("--fov", ro.fov, "Matched FOV size WxH")->capture_default_str();
  reg->add_option("--seed", ro.seed, "RANSAC seed")->capture_default_str();
  reg->add_option("--altitude", ro.altitudes, "Only these altitudes");
  reg->add_option("--jobs", ro.jobs, "Scenes processed in parallel")->capture_default_str();
  reg->add_option("--ransac-thresh", ro.ransac_thresh, "RANSAC threshold (HR px)")->capture_default_str();
  reg->add_option("--search-margin", ro.search_margin, "Refinement search margin (HR px)")->capture_default_str();
  reg->add_flag("--no-color-correct", ro.no_color, "Skip color correction");
  reg->add_flag("--allow-inexact-scale", ro.allow_inexact, "Accept HR/FOV width ratios other than 50/9");
  reg->add_flag("--no-images", ro.no_images, "Write metadata and report only");

  SynthOptions so;
  auto* syn = app.add_subcommand("synth", "Generate a synthetic dataset with known geometry and blur");
  syn->add_option("--out", so.out, "Output directory")->required();
  syn->add_option("--kind", so.kind, "scenes or sr")->capture_default_str();
  syn->add_option("--seed", so.seed)->capture_default_str();
  syn->add_option("--scenes", so.scenes)->capture_default_str();
  syn->add_option("--hr", so.hr, "HR frame size WxH (multiples of 50)")->capture_default_str();
  syn->add_option("--altitude", so.altitudes, "Altitudes to generate");
  syn->add_flag("--raw", so.raw, "Also write Bayer RAW frames");
  syn->add_option("--noise", so.noise, "LR noise sigma")->capture_default_str();
  syn->add_option("--blur-low", so.blur_low, "Blur sigma (HR px) at 10 m; negative keeps the kind default")->capture_default_str();
  syn->add_option("--blur-high", so.blur_high, "Blur sigma (HR px) at 140 m; negative keeps the kind default")->capture_default_str();
  syn->add_option("--corrupt-fraction", so.corrupt)->capture_default_str();
  syn->add_option("--jitter", so.jitter, "LR shift jitter (LR px)")->capture_default_str();
  syn->add_option("--rotation", so.rotation, "LR rotation jitter (degrees)")->capture_default_str();
  syn->add_option("--bit-depth", so.bit_depth)->capture_default_str();
  syn->add_option("--sr-count", so.sr_count, "SR samples per altitude")->capture_default_str();
  syn->add_option("--sr-lr-size", so.sr_lr_size, "SR sample LR side")->capture_default_str();

  EvalOptions eo;
  auto* ev = app.add_subcommand("eval", "Per-altitude Y-PSNR/SSIM of predictions with a bicubic baseline");
  ev->add_option("--pred", eo.pred, "Prediction directory");
  ev->add_option("--gt", eo.gt, "Ground-truth directory (hr_*.png)");
  ev->add_option("--lr", eo.lr, "LR directory for the bicubic baseline (default: --gt)");
  ev->add_option("--manifest", eo.manifest, "Evaluate manifest pairs instead of directories");
  ev->add_option("--split", eo.split, "Manifest split filter");
  ev->add_option("--out", eo.out, "CSV output file");
  ev->add_option("--shave", eo.shave)->capture_default_str();
  ev->add_flag("--quantize", eo.quantize, "Round to 8-bit levels before comparing");
  ev->add_option("--altitude", eo.altitudes, "Only these altitudes");

  AnalyzeOptions ao;
  auto* an = app.add_subcommand("analyze", "PSD, blur kernel and error-map analyses");
  an->require_subcommand(1);
  auto add_common = [&](CLI::App* a) {
    a->add_option("--out", ao.out, "Output directory")->required();
  };
  auto* psd = an->add_subcommand("psd", "Radially averaged power spectra");
  add_common(psd);
  psd->add_option("--images", ao.images, "Image files");
  psd->add_option("--manifest", ao.manifest, "Group first LR frames by altitude");
  psd->add_option("--split", ao.split);
  psd->add_option("--altitude", ao.altitudes);
  psd->add_flag("--crop-by-altitude", ao.crop_by_altitude, "Equalize ground footprint with the lowest altitude");
  psd->add_option("--tile", ao.tile)->capture_default_str();
  psd->add_option("--bins", ao.bins)->capture_default_str();
  auto* ker = an->add_subcommand("kernel", "Blur kernel estimate from HR/LR pairs");
  add_common(ker);
  ker->add_option("--pairs", ao.pairs, "Directory with hr_K/lr_K pairs");
  ker->add_option("--hr", ao.hr);
  ker->add_option("--lr", ao.lr);
  ker->add_option("--support", ao.support)->capture_default_str();
  ker->add_option("--lambda", ao.lambda)->capture_default_str();
  auto* err = an->add_subcommand("errmap", "Error maps of aligned pairs");
  add_common(err);
  err->add_option("--pairs", ao.pairs, "Directory with hr_K/lr_K pairs");
  err->add_option("--hr", ao.hr);
  err->add_option("--lr", ao.lr);

  TrainOptions to;
  auto* tr = app.add_subcommand("train", "Train the altitude-aware network");
  add_net_options(tr, to.net);
  tr->add_option("--data", to.data, "Sample directory (<split>/.../<altitude>/{lr,hr}_K.png)");
  tr->add_flag("--synthetic", to.synthetic, "Generate altitude-blurred samples in memory");
  tr->add_option("--out", to.out, "Output directory")->required();
  tr->add_option("--resume", to.resume, "Checkpoint to continue from");
  tr->add_option("--steps", to.steps)->capture_default_str();
  tr->add_option("--batch", to.batch)->capture_default_str();
  tr->add_option("--lr", to.lr, "ADAM learning rate")->capture_default_str();
  tr->add_option("--crop", to.crop, "Random crop side (0 = whole samples)")->capture_default_str();
  tr->add_option("--val-every", to.val_every)->capture_default_str();
  tr->add_option("--seed", to.seed)->capture_default_str();
  tr->add_option("--altitude", to.altitudes, "Only these altitudes");
  tr->add_option("--shave", to.shave)->capture_default_str();
  tr->add_option("--sr-count", to.sr_count)->capture_default_str();
  tr->add_option("--sr-lr-size", to.sr_lr_size)->capture_default_str();
  tr->add_option("--blur-low", to.blur_low)->capture_default_str();
  tr->add_option("--blur-high", to.blur_high)->capture_default_str();

  InferOptions io_opts;
  io_opts.net = {0, 0, 0, 0, "", false};
  auto* inf = app.add_subcommand("infer", "Super-resolve LR images with a checkpoint");
  add_net_options(inf, io_opts.net);
  inf->add_option("--checkpoint", io_opts.checkpoint)->required();
  inf->add_option("--input", io_opts.input, "LR image or directory of lr_*.png")->required();
  inf->add_option("--out", io_opts.out, "Output directory")->required();
  inf->add_option("--altitude", io_opts.altitude, "Flight altitude in meters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }
  logger();
  try {
    if (*reg) return cmd_register(ro, *reg);
    if (*syn) return cmd_synth(so, *syn);
    if (*ev) return cmd_eval(eo, *ev);
    if (*psd) return cmd_analyze_psd(ao, *psd);
    if (*ker) return cmd_analyze_kernel(ao, *ker);
    if (*err) return cmd_analyze_errmap(ao, *err);
    if (*tr) return cmd_train(to, *tr);
    if (*inf) return cmd_infer(io_opts, *inf);
  } catch (const InvalidInput& e) {
    logger()->error("{}", e.what());
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    logger()->error("{}", e.what());
    return kInputError;
  }
  return kInputError;
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> storage{"dsrf"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace dsrf::cli
