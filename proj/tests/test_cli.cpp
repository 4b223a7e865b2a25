#include <gtest/gtest.h>

#include <fstream>
#include <iterator>
#include <sstream>

#include "dsrf/cli/commands.hpp"
#include "dsrf/imgcore/io.hpp"
#include "test_util.hpp"

using namespace dsrf;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

int run(std::vector<std::string> args) { return cli::run(args); }

const std::vector<std::string> kTinyNet{"--channels", "8", "--hidden", "3", "--embed", "8"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST(Cli, UnknownCommandIsInputError) { EXPECT_EQ(run({"frobnicate"}), cli::kInputError); }

TEST(Cli, MissingManifestIsInputError) {
  test::TempDir dir("cli_missing");
  EXPECT_EQ(run({"register", "--manifest", (dir.path() / "none.jsonl").string(), "--out", dir.path().string()}),
            cli::kInputError);
}

TEST(Cli, EmptyManifestGivesEmptyReport) {
  test::TempDir dir("cli_empty");
  std::ofstream(dir.path() / "m.jsonl") << "\n";
  const auto out = dir.path() / "out";
  EXPECT_EQ(run({"register", "--manifest", (dir.path() / "m.jsonl").string(), "--out", out.string()}), cli::kOk);
  EXPECT_TRUE(fs::exists(out / "report.csv"));
  EXPECT_TRUE(fs::exists(out / "run_config.ini"));
  EXPECT_EQ(read_csv(out / "report.csv").size(), 1u);
}

TEST(Cli, UnknownAltitudeInManifestIsInputError) {
  test::TempDir dir("cli_alt60");
  std::ofstream(dir.path() / "m.jsonl")
      << R"({"scene_id":"s","altitude":60,"hr_path":"h","lr_burst_paths":["1","2","3","4","5","6","7"],"split":"train"})"
      << "\n";
  EXPECT_EQ(run({"register", "--manifest", (dir.path() / "m.jsonl").string(), "--out", dir.path().string()}),
            cli::kInputError);
}

TEST(Cli, SynthIsDeterministicAndRegisters) {
  test::TempDir dir("cli_synth");
  const auto a = dir.path() / "a", b = dir.path() / "b";
  const std::vector<std::string> args{"--hr", "1000x750", "--scenes", "3", "--altitude", "10", "--seed", "4"};
  ASSERT_EQ(run(with({"synth", "--out", a.string()}, args)), cli::kOk);
  ASSERT_EQ(run(with({"synth", "--out", b.string()}, args)), cli::kOk);
  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file() || e.path().filename() == "run_config.ini") continue;
    const auto rel = fs::relative(e.path(), a);
    if (rel == "manifest.jsonl") continue;  // holds absolute paths
    EXPECT_TRUE(slurp(e.path()) == slurp(b / rel)) << rel;
    ++files;
  }
  EXPECT_GT(files, 20);

  const auto out = dir.path() / "reg";
  ASSERT_EQ(run({"register", "--manifest", (a / "manifest.jsonl").string(), "--out", out.string(), "--fov", "180x135",
                 "--patch", "45", "--stride", "45", "--no-images"}),
            cli::kOk);
  const auto rows = read_csv(out / "report.csv");
  ASSERT_GE(rows.size(), 2u);
  const auto& head = rows[0];
  const auto col = std::find(head.begin(), head.end(), "candidates") - head.begin();
  ASSERT_LT(static_cast<std::size_t>(col), head.size());
  int total = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) total += std::stoi(rows[i][static_cast<std::size_t>(col)]);
  EXPECT_EQ(total, 3 * 12);
}

TEST(Cli, EvalExactMatchAndMissingPredictions) {
  test::TempDir dir("cli_eval");
  ASSERT_EQ(run({"synth", "--kind", "sr", "--out", dir.path().string(), "--sr-count", "2", "--altitude", "10",
                 "--altitude", "80"}),
            cli::kOk);
  const auto val = dir.path() / "val";
  const auto csv = dir.path() / "eval" / "same.csv";
  ASSERT_EQ(run({"eval", "--gt", val.string(), "--pred", val.string(), "--out", csv.string()}), cli::kOk);
  const auto rows = read_csv(csv);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0][0], "altitude");
  EXPECT_EQ(rows[1][0], "10");
  EXPECT_EQ(rows[2][0], "80");
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i][6], rows[i][1]);

  const auto empty = dir.path() / "nopred";
  fs::create_directories(empty);
  EXPECT_EQ(run({"eval", "--gt", val.string(), "--pred", empty.string()}), cli::kPairingError);
}

TEST(Cli, TrainInferEvalRoundTrip) {
  test::TempDir dir("cli_train");
  ASSERT_EQ(run({"synth", "--kind", "sr", "--out", (dir.path() / "data").string(), "--sr-count", "2", "--altitude",
                 "10", "--altitude", "140"}),
            cli::kOk);
  const auto val = dir.path() / "data" / "val";

  // zero steps keep the zero residual: predictions equal the bicubic baseline
  const auto fresh = dir.path() / "fresh";
  ASSERT_EQ(run(with({"train", "--data", (dir.path() / "data").string(), "--out", fresh.string(), "--steps", "0"},
                     kTinyNet)),
            cli::kOk);
  EXPECT_TRUE(fs::exists(fresh / "run_config.ini"));
  const auto pred = dir.path() / "pred_fresh";
  ASSERT_EQ(run({"infer", "--checkpoint", (fresh / "checkpoint.bin").string(), "--input", val.string(), "--out",
                 pred.string()}),
            cli::kOk);
  const auto csv = dir.path() / "fresh.csv";
  ASSERT_EQ(run({"eval", "--gt", val.string(), "--pred", pred.string(), "--out", csv.string()}), cli::kOk);
  const auto rows = read_csv(csv);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_NEAR(std::stod(rows[i][2]), std::stod(rows[i][4]), 1e-3);
    EXPECT_NEAR(std::stod(rows[i][3]), std::stod(rows[i][5]), 1e-4);
  }

  const auto trained = dir.path() / "trained";
  ASSERT_EQ(run(with({"train", "--data", (dir.path() / "data").string(), "--out", trained.string(), "--steps", "30",
                      "--batch", "2", "--lr", "1e-3", "--val-every", "10"},
                     kTinyNet)),
            cli::kOk);
  EXPECT_GE(read_csv(trained / "metrics.csv").size(), 4u);
  const auto ckpt = (trained / "checkpoint.bin").string();
  const auto input = (val / "10" / "lr_0000.png").string();
  auto infer_at = [&](const std::string& alt, bool freeze) {
    const auto out = dir.path() / ("inf_" + alt + (freeze ? "_frozen" : ""));
    std::vector<std::string> args{"infer", "--checkpoint", ckpt, "--input", input, "--out", out.string(), "--altitude", alt};
    if (freeze) args.push_back("--freeze-altitude");
    EXPECT_EQ(run(args), cli::kOk);
    EXPECT_TRUE(fs::exists(out / "run_config.ini"));
    return io::read_image(out / "sr_0000.png");
  };
  EXPECT_GT(test::max_abs_diff(infer_at("10", false), infer_at("140", false)), 0.0);
  EXPECT_EQ(test::max_abs_diff(infer_at("10", true), infer_at("140", true)), 0.0);

  EXPECT_EQ(run({"infer", "--checkpoint", ckpt, "--input", input, "--out", (dir.path() / "x").string(), "--altitude",
                 "10", "--channels", "16"}),
            cli::kConfigMismatch);
  EXPECT_EQ(run({"infer", "--checkpoint", ckpt, "--input", input, "--out", (dir.path() / "y").string(), "--altitude",
                 "-1"}),
            cli::kInputError);
}

TEST(Cli, ReRunFromRunConfigReproduces) {
  test::TempDir dir("cli_rerun");
  const auto a = dir.path() / "a";
  ASSERT_EQ(run({"synth", "--kind", "sr", "--out", a.string(), "--sr-count", "1", "--altitude", "30", "--seed", "7"}),
            cli::kOk);
  const std::string cfg = slurp(a / "run_config.ini");
  EXPECT_NE(cfg.find("seed"), std::string::npos);
  ASSERT_EQ(run({"--config", (a / "run_config.ini").string(), "synth", "--out", (dir.path() / "b").string()}),
            cli::kOk);
  for (const char* f : {"train/30/hr_0000.png", "train/30/lr_0000.png", "val/30/hr_0000.png", "truth.json"}) {
    EXPECT_TRUE(slurp(a / f) == slurp(dir.path() / "b" / f)) << f;
  }
}

TEST(Cli, AnalyzePsdOnConstantImages) {
  test::TempDir dir("cli_psd");
  Image c(1, 128, 128);
  for (float& v : c.data()) v = 0.4f;
  io::write_png(dir.path() / "c.png", c);
  const auto out = dir.path() / "psd";
  ASSERT_EQ(run({"analyze", "psd", "--images", (dir.path() / "c.png").string(), "--out", out.string()}), cli::kOk);
  EXPECT_TRUE(fs::exists(out / "psd.svg"));
  const auto rows = read_csv(out / "psd_images.csv");
  ASSERT_GE(rows.size(), 3u);
  // only the lowest bin carries power
  EXPECT_GT(std::stod(rows[1][1]), -10.0);
  for (std::size_t i = 2; i < rows.size(); ++i) EXPECT_EQ(std::stod(rows[i][1]), -30.0) << rows[i][0];
  EXPECT_TRUE(fs::exists(out / "run_config.ini"));
  EXPECT_EQ(run({"analyze", "psd", "--out", out.string()}), cli::kInputError);
}

TEST(Cli, AnalyzeKernelAndErrmap) {
  test::TempDir dir("cli_kernel");
  ASSERT_EQ(run({"synth", "--kind", "sr", "--out", dir.path().string(), "--sr-count", "2", "--altitude", "50",
                 "--sr-lr-size", "36"}),
            cli::kOk);
  const auto pairs = (dir.path() / "train" / "50").string();
  const auto kout = dir.path() / "kernel";
  ASSERT_EQ(run({"analyze", "kernel", "--pairs", pairs, "--out", kout.string(), "--support", "11"}), cli::kOk);
  EXPECT_TRUE(fs::exists(kout / "kernel.csv"));
  EXPECT_TRUE(fs::exists(kout / "kernel.json"));
  const auto eout = dir.path() / "errmap";
  ASSERT_EQ(run({"analyze", "errmap", "--pairs", pairs, "--out", eout.string()}), cli::kOk);
  const auto rows = read_csv(eout / "errmap.csv");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0][3], "edge_concentration");
  EXPECT_EQ(run({"analyze", "kernel", "--pairs", (dir.path() / "none").string(), "--out", kout.string()}),
            cli::kInputError);
}
