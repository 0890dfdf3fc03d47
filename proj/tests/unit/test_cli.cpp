#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "../support.hpp"
#include "cli_app.hpp"

using namespace lowlight;
using testing_support::random_image;
using testing_support::TempDir;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "lowlight");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = lowlight::cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string shipped_calibration() { return std::string(LOWLIGHT_DATA_DIR) + "/calibration/rtx3090_table.cal"; }

void fill_dir(const fs::path& dir, int n, int size = 24) {
  fs::create_directories(dir);
  for (int i = 0; i < n; ++i)
    save_image(dir / ("im" + std::to_string(i) + ".png"), random_image(size, size, 3, 100 + i, 0.0, 0.25));
}

}  // namespace

TEST(Cli, HelpAndVersionExitZero) {
  auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("enhance"), std::string::npos);
  EXPECT_EQ(run({"eei", "--help"}).code, 0);
  EXPECT_EQ(run({"--version"}).code, 0);
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"enhance", "--bogus"}).code, 1);
  EXPECT_EQ(run({"eei", "--pi", "10"}).code, 1);  // no calibration
}

TEST(Cli, BadSetKeyNamesTheKey) {
  auto r = run({"--set", "apa.gama=2", "--dump-config"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("apa.gama"), std::string::npos) << r.err;
  EXPECT_EQ(run({"--set", "noequals", "--dump-config"}).code, 1);
}

TEST(Cli, BadConfigFileNamesKeyAndLine) {
  TempDir d;
  {
    std::ofstream f(d / "c.toml");
    f << "[io]\npatch_size = 128\nwobble = 1\n";
  }
  auto r = run({"--config", (d / "c.toml").string(), "--dump-config"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("io.wobble"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("c.toml:3"), std::string::npos) << r.err;
}

TEST(Cli, DumpConfigRoundTrips) {
  auto r = run({"--set", "apa.beta_red=1.25", "--set", "train.seed=9", "--threads", "2", "--dump-config"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto c = parse_config_string(r.out);
  EXPECT_EQ(c.apa.beta_red, 1.25);
  EXPECT_EQ(c.train.seed, 9u);
  EXPECT_EQ(c.io.threads, 2);
  TempDir d;
  {
    std::ofstream f(d / "dump.toml");
    f << r.out;
  }
  auto again = run({"--config", (d / "dump.toml").string(), "--dump-config"});
  EXPECT_EQ(again.out, r.out);
}

TEST(Cli, FlagsOverrideConfigFile) {
  TempDir d;
  {
    std::ofstream f(d / "c.toml");
    f << "[eei]\nweights = \"6:2:2\"\n";
  }
  auto r = run({"--config", (d / "c.toml").string(), "--set", "eei.weights=1:0:0", "--dump-config"});
  EXPECT_EQ(parse_config_string(r.out).eei.weights, "1:0:0");
}

TEST(Cli, EeiReproducesFourKRowFromShippedCalibration) {
  auto r = run({"-q", "eei", "--calibration", shipped_calibration(), "--pi", "100", "--time-s", "0.04182",
                "--mem-bytes", "2.756e9", "--flops", "9.91e9", "--params", "1320"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("EEI         94.96"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("TF          1.030"), std::string::npos) << r.out;
}

TEST(Cli, EeiFromScoresFileAndCsvReport) {
  TempDir d;
  {
    std::ofstream f(d / "s.csv");
    f << "filename,niqe,brisque\na.png,4.30,29.92\n";
  }
  auto r = run({"-q", "eei", "--calibration", shipped_calibration(), "--scores", (d / "s.csv").string(),
                "--time-s", "0.0406", "--mem-bytes", "2.368e9", "--report", (d / "r.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("(fallback)"), std::string::npos);
  EXPECT_NE(r.out.find("PI          17.11"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(d / "r.csv"));
}

TEST(Cli, EeiArgumentConflicts) {
  const auto cal = shipped_calibration();
  EXPECT_EQ(run({"-q", "eei", "--calibration", cal, "--pi", "1"}).code, 1);
  EXPECT_EQ(run({"-q", "eei", "--calibration", cal, "--pi", "1", "--time-s", "1", "--mem-bytes", "1", "--flops", "1"})
                .code,
            1);
  EXPECT_EQ(run({"-q", "eei", "--calibration", "/nonexistent.cal", "--pi", "1", "--time-s", "1", "--mem-bytes", "1"})
                .code,
            2);
}

TEST(Cli, ApaWritesSkipsAndForces) {
  TempDir d;
  fill_dir(d / "in", 3);
  auto r = run({"apa", "-i", (d / "in").string(), "-o", (d / "aug").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(list_images(d / "aug").size(), 3u);
  EXPECT_NE(r.err.find("event=apa_done written=3"), std::string::npos) << r.err;

  const auto stamp = fs::last_write_time(d / "aug" / "im0.png");
  r = run({"apa", "-i", (d / "in").string(), "-o", (d / "aug").string()});
  EXPECT_NE(r.err.find("written=0 skipped=3"), std::string::npos) << r.err;
  EXPECT_EQ(fs::last_write_time(d / "aug" / "im0.png"), stamp);

  r = run({"apa", "--force", "-i", (d / "in").string(), "-o", (d / "aug").string()});
  EXPECT_NE(r.err.find("written=3"), std::string::npos) << r.err;
}

TEST(Cli, ApaEmptyOrBrokenInputs) {
  TempDir d;
  fs::create_directories(d / "empty");
  EXPECT_EQ(run({"-q", "apa", "-i", (d / "empty").string(), "-o", (d / "o").string()}).code, 2);
  fill_dir(d / "in", 2);
  {
    std::ofstream f(d / "in" / "zz.png");
    f << "not a png";
  }
  auto r = run({"apa", "-i", (d / "in").string(), "-o", (d / "o").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(list_images(d / "o").size(), 2u);
  EXPECT_NE(r.err.find("zz.png"), std::string::npos);
}

TEST(Cli, ZeroWeightEnhanceIsIdentity) {
  TempDir d;
  fill_dir(d / "in", 2, 40);
  save_checkpoint(d / "zero.bin", CurveNet<float>{});
  for (bool tiled : {false, true}) {
    const auto out = d / (tiled ? "tiled" : "full");
    std::vector<std::string> args{"-q", "enhance", "-i", (d / "in").string(), "-o", out.string(),
                                  "-c", (d / "zero.bin").string()};
    if (tiled) args.insert(args.end(), {"--tiled", "--patch", "16", "--overlap", "4"});
    auto r = run(args);
    ASSERT_EQ(r.code, 0) << r.err;
    for (int i = 0; i < 2; ++i) {
      const auto name = "im" + std::to_string(i) + ".png";
      EXPECT_EQ(load_image(out / name), load_image(d / "in" / name)) << name << " tiled=" << tiled;
    }
  }
  // single file into a directory
  fs::create_directories(d / "single");
  auto r = run({"-q", "enhance", "-i", (d / "in" / "im1.png").string(), "-o", (d / "single").string(), "-c",
                (d / "zero.bin").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(d / "single" / "im1.png"));
}

TEST(Cli, EnhanceMissingCheckpoint) {
  TempDir d;
  fill_dir(d / "in", 1);
  auto r = run({"enhance", "-i", (d / "in").string(), "-o", (d / "o").string(), "-c", (d / "nope.bin").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("checkpoint not found"), std::string::npos);
  EXPECT_EQ(run({"-q", "enhance", "-i", (d / "in").string(), "-o", (d / "o").string()}).code, 1);
}

TEST(Cli, CheckpointInfo) {
  TempDir d;
  save_checkpoint(d / "w.bin", CurveNet<float>{});
  auto r = run({"checkpoint-info", (d / "w.bin").string()});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("params=1321"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("macs_per_pixel=1195"), std::string::npos) << r.out;
  EXPECT_EQ(run({"-q", "checkpoint-info", (d / "missing.bin").string()}).code, 2);
}

TEST(Cli, SplitDeterministicAndTooFew) {
  TempDir d;
  fill_dir(d / "in", 20, 4);
  auto a = run({"-q", "split", "-i", (d / "in").string(), "--seed", "5"});
  auto b = run({"-q", "split", "-i", (d / "in").string(), "--seed", "5"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  std::istringstream in(a.out);
  auto m = read_manifest(in);
  EXPECT_EQ(m.train.size(), 16u);
  EXPECT_EQ(m.val.size(), 2u);
  EXPECT_EQ(m.test.size(), 2u);

  auto f = run({"-q", "split", "-i", (d / "in").string(), "--ratios", "1:1:2", "-o", (d / "m.txt").string()});
  ASSERT_EQ(f.code, 0);
  std::ifstream mf(d / "m.txt");
  EXPECT_EQ(read_manifest(mf).test.size(), 10u);

  fill_dir(d / "few", 4, 4);
  EXPECT_EQ(run({"-q", "split", "-i", (d / "few").string()}).code, 2);
  EXPECT_EQ(run({"-q", "split", "-i", (d / "in").string(), "--ratios", "8:1"}).code, 2);
}

TEST(Cli, StatsWritesRowsAndHistograms) {
  TempDir d;
  fill_dir(d / "in", 5, 16);
  auto r = run({"-q", "stats", "-i", (d / "in").string(), "--histograms", (d / "h.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 6);
  std::ifstream h(d / "h.csv");
  std::string line;
  int lines = 0;
  while (std::getline(h, line)) ++lines;
  EXPECT_EQ(lines, 1 + 7 * kHistogramBins);
}

TEST(Cli, TrainTinyRunWritesCheckpoint) {
  TempDir d;
  fill_dir(d / "in", 4, 32);
  ASSERT_EQ(run({"-q", "apa", "-i", (d / "in").string(), "-o", (d / "aug").string()}).code, 0);
  auto r = run({"-q", "--set", "train.micro_batch=2", "--set", "train.accum_steps=2", "--set", "train.warmup_epochs=0", "train", "--data",
                (d / "in").string(), "--augmented", (d / "aug").string(), "--out", (d / "run").string(), "--epochs",
                "1", "--patch", "32"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(d / "run" / "last.llw"));
  EXPECT_TRUE(fs::exists(d / "run" / "best.llw"));
  EXPECT_TRUE(fs::exists(d / "run" / "train_log.csv"));
  // missing augmented pairs is a runtime failure, not a crash
  EXPECT_NE(run({"-q", "train", "--data", (d / "in").string(), "--out", (d / "run2").string()}).code, 0);
}
