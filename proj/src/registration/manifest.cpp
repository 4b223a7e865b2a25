#include "dsrf/registration/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace dsrf::registration {

using nlohmann::json;

bool valid_altitude(int altitude) {
  return std::find(kAltitudes.begin(), kAltitudes.end(), altitude) != kAltitudes.end();
}

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw InvalidInput("unknown split '" + s + "'");
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

ScenePair parse_record(const json& j, int line, const std::filesystem::path& base) {
  if (!j.is_object()) throw ManifestError(line, "record must be a JSON object");
  ScenePair s;
  s.line = line;
  try {
    s.scene_id = j.at("scene_id").get<std::string>();
    s.altitude = j.at("altitude").get<int>();
    s.hr_path = resolve(base, j.at("hr_path").get<std::string>());
    for (const auto& p : j.at("lr_burst_paths")) s.lr_burst_paths.push_back(resolve(base, p.get<std::string>()));
    if (j.contains("raw_paths") && !j.at("raw_paths").is_null()) {
      for (const auto& p : j.at("raw_paths")) s.raw_paths.push_back(resolve(base, p.get<std::string>()));
    }
    s.split = parse_split(j.at("split").get<std::string>());
    if (j.contains("truth_lr_to_hr")) {
      const auto v = j.at("truth_lr_to_hr").get<std::vector<double>>();
      if (v.size() != 9) throw ManifestError(line, "truth_lr_to_hr needs 9 values");
      std::array<double, 9> m{};
      std::copy(v.begin(), v.end(), m.begin());
      s.truth_lr_to_hr = geometry::Homography(m);
    }
    if (j.contains("corrupted_hr_rects")) {
      for (const auto& r : j.at("corrupted_hr_rects")) {
        const auto v = r.get<std::vector<int>>();
        if (v.size() != 4) throw ManifestError(line, "corrupted_hr_rects entries need x,y,w,h");
        s.corrupted_hr_rects.push_back({v[0], v[1], v[2], v[3]});
      }
    }
  } catch (const ManifestError&) {
    throw;
  } catch (const std::exception& e) {
    throw ManifestError(line, e.what());
  }
  if (s.scene_id.empty()) throw ManifestError(line, "empty scene_id");
  if (!valid_altitude(s.altitude)) {
    throw ManifestError(line, "altitude " + std::to_string(s.altitude) + " is not in the altitude set");
  }
  if (static_cast<int>(s.lr_burst_paths.size()) != kBurstLength) {
    throw ManifestError(line, "lr_burst_paths must list " + std::to_string(kBurstLength) + " frames, got " +
                                  std::to_string(s.lr_burst_paths.size()));
  }
  if (!s.raw_paths.empty() && static_cast<int>(s.raw_paths.size()) != kBurstLength) {
    throw ManifestError(line, "raw_paths must be empty or list " + std::to_string(kBurstLength) + " frames");
  }
  return s;
}

}  // namespace

std::vector<ScenePair> parse_manifest(std::istream& in, const std::filesystem::path& base_dir) {
  std::vector<ScenePair> out;
  std::map<std::string, std::pair<Split, int>> splits;
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ManifestError(line, std::string("invalid JSON: ") + e.what());
    }
    ScenePair s = parse_record(j, line, base_dir);
    const auto [it, inserted] = splits.emplace(s.scene_id, std::make_pair(s.split, line));
    if (!inserted && it->second.first != s.split) {
      throw ManifestError(line, "scene '" + s.scene_id + "' is in split " + to_string(s.split) + " but line " +
                                    std::to_string(it->second.second) + " puts it in " +
                                    to_string(it->second.first));
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ScenePair> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open manifest " + path.string());
  return parse_manifest(in, path.parent_path());
}

std::string manifest_line(const ScenePair& s) {
  json j;
  j["scene_id"] = s.scene_id;
  j["altitude"] = s.altitude;
  j["hr_path"] = s.hr_path.generic_string();
  j["lr_burst_paths"] = json::array();
  for (const auto& p : s.lr_burst_paths) j["lr_burst_paths"].push_back(p.generic_string());
  if (!s.raw_paths.empty()) {
    j["raw_paths"] = json::array();
    for (const auto& p : s.raw_paths) j["raw_paths"].push_back(p.generic_string());
  }
  j["split"] = to_string(s.split);
  if (s.truth_lr_to_hr) {
    const auto& m = s.truth_lr_to_hr->matrix();
    j["truth_lr_to_hr"] = std::vector<double>(m.begin(), m.end());
  }
  if (!s.corrupted_hr_rects.empty()) {
    j["corrupted_hr_rects"] = json::array();
    for (const auto& r : s.corrupted_hr_rects) j["corrupted_hr_rects"].push_back({r.x, r.y, r.width, r.height});
  }
  return j.dump();
}

void write_manifest(const std::filesystem::path& path, const std::vector<ScenePair>& scenes) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write manifest " + path.string());
  for (const auto& s : scenes) out << manifest_line(s) << "\n";
}

}  // namespace dsrf::registration
