#pragma once

// Command-line front end. Kept in a header so tests can drive run_cli
// in-process; tools/main.cpp only forwards argv.
//
// Exit codes: 0 success, 1 usage or config error, 2 runtime error.

#include <CLI11.hpp>

#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lowlight/lowlight.hpp"

namespace lowlight::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Raised for problems the user can fix on the command line or in the config.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Log {
 public:
  Log(std::ostream& err, bool quiet) : err_(err), quiet_(quiet) {}
  void info(const std::string& line) const {
    if (!quiet_) err_ << line << '\n';
  }
  void error(const std::string& line) const { err_ << line << '\n'; }

 private:
  std::ostream& err_;
  bool quiet_;
};

inline std::string kv_quote(const std::string& s) {
  if (s.find_first_of(" \t\"=") == std::string::npos && !s.empty()) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + '"';
}

namespace fs = std::filesystem;

inline std::string require_path(const std::string& value, const char* what) {
  if (value.empty()) throw UsageError(std::string("missing ") + what);
  return value;
}

inline CurveNet<float> load_net(const AppConfig& cfg) {
  const auto path = require_path(cfg.curve.weights, "--checkpoint (or curve.weights)");
  if (!fs::exists(path)) throw IoError("checkpoint not found: " + path);
  return load_checkpoint<float>(path);
}

// ---- subcommands -----------------------------------------------------------------

inline int cmd_apa(const AppConfig& cfg, bool force, const Log& log) {
  const fs::path in = require_path(cfg.io.input_dir, "--input (or io.input_dir)");
  const fs::path out = require_path(cfg.io.augmented_dir, "--output (or io.augmented_dir)");
  if (!fs::is_directory(in)) throw IoError("not a directory: " + in.string());
  const auto files = list_images(in);
  if (files.empty()) throw IoError("no images in " + in.string());
  fs::create_directories(out);
  int failed = 0, written = 0, skipped = 0;
  for (const auto& f : files) {
    const auto target = out / f.filename();
    if (fs::exists(target) && !force) {
      ++skipped;
      log.info("event=apa file=" + kv_quote(f.filename().string()) + " status=skipped");
      continue;
    }
    try {
      save_image(target, apa_transform(load_image(f), cfg.apa), cfg.io.jpeg_quality);
      ++written;
      log.info("event=apa file=" + kv_quote(f.filename().string()) + " status=ok");
    } catch (const std::exception& e) {
      ++failed;
      log.error("event=apa file=" + kv_quote(f.filename().string()) + " status=error message=" + kv_quote(e.what()));
    }
  }
  log.info("event=apa_done written=" + std::to_string(written) + " skipped=" + std::to_string(skipped) +
           " failed=" + std::to_string(failed));
  return failed > 0 ? kExitRuntime : kExitOk;
}

inline int cmd_enhance(const AppConfig& cfg, const Log& log) {
  const fs::path in = require_path(cfg.io.input_dir, "--input (or io.input_dir)");
  const fs::path out = require_path(cfg.io.output_dir, "--output (or io.output_dir)");
  const auto net = load_net(cfg);
  auto run = [&](const Image& img) {
    return cfg.io.tiled ? enhance_tiled(net, img, cfg.io.patch_size, cfg.io.overlap, net.iterations())
                        : enhance(net, img);
  };
  if (fs::is_regular_file(in)) {
    fs::path target = out;
    if (fs::is_directory(out)) target = out / in.filename();
    save_image(target, run(load_image(in)), cfg.io.jpeg_quality);
    log.info("event=enhance file=" + kv_quote(in.filename().string()) + " output=" + kv_quote(target.string()));
    return kExitOk;
  }
  if (!fs::is_directory(in)) throw IoError("input not found: " + in.string());
  const auto files = list_images(in);
  if (files.empty()) throw IoError("no images in " + in.string());
  fs::create_directories(out);
  int failed = 0;
  for (const auto& f : files) {
    try {
      save_image(out / f.filename(), run(load_image(f)), cfg.io.jpeg_quality);
      log.info("event=enhance file=" + kv_quote(f.filename().string()) + " status=ok");
    } catch (const std::exception& e) {
      ++failed;
      log.error("event=enhance file=" + kv_quote(f.filename().string()) + " status=error message=" +
                kv_quote(e.what()));
    }
  }
  return failed > 0 ? kExitRuntime : kExitOk;
}

inline int cmd_train(const AppConfig& cfg, const std::string& init, std::ostream& err, const Log& log, bool quiet) {
  const fs::path data = require_path(cfg.io.input_dir, "--data (or io.input_dir)");
  const fs::path aug = require_path(cfg.io.augmented_dir, "--augmented (or io.augmented_dir)");
  const fs::path out = require_path(cfg.io.output_dir, "--out (or io.output_dir)");
  TrainOptions opt;
  opt.out_dir = out;
  opt.width = cfg.curve.width;
  opt.iterations = cfg.curve.iterations;
  if (!init.empty()) opt.init = load_checkpoint<float>(init);
  if (!cfg.io.val_dir.empty()) opt.validation = load_named_images(cfg.io.val_dir);
  opt.val.patch = cfg.io.patch_size;
  opt.val.overlap = cfg.io.overlap;
  opt.val.weights = EeiWeights::parse(cfg.eei.weights);
  if (!cfg.eei.scores.empty()) opt.val.scores_file = cfg.eei.scores;
  if (!cfg.eei.calibration.empty()) opt.val.calibration = load_calibration(cfg.eei.calibration);
  if (!quiet) opt.log = &err;
  const auto res = train(data, aug, cfg.train, cfg.loss, opt);
  log.info("event=train_done steps=" + std::to_string(res.steps.size()) + " best_epoch=" +
           std::to_string(res.best_epoch) + " best=" + kv_quote(res.best_checkpoint.string()) +
           " last=" + kv_quote(res.last_checkpoint.string()) + " log=" + kv_quote(res.step_log.string()));
  return kExitOk;
}

struct EeiArgs {
  std::optional<double> pi;
  std::optional<double> time_s;
  std::optional<double> mem_bytes;
  std::optional<double> flops;
  std::optional<double> params;
  std::string resolution;
  std::string report_csv;
  std::string calibrate_out;
  std::string base_resolution = "3840x2160";
  bool profile = false;
};

inline int cmd_eei(const AppConfig& cfg, const EeiArgs& a, std::ostream& out, const Log& log) {
  const ProfileOptions popt{cfg.eei.warmup, cfg.eei.runs, cfg.io.patch_size, cfg.io.overlap};
  if (!a.calibrate_out.empty()) {
    CurveNet<float> net(cfg.curve.width, cfg.curve.iterations);
    if (!cfg.curve.weights.empty()) net = load_net(cfg);
    CurveNetAdapter adapter(net);
    AllocationProbe probe;
    auto base = calibrate(adapter, probe, Resolution::parse(a.base_resolution), popt);
    save_calibration(a.calibrate_out, base);
    for (const auto& w : base.warnings) log.info("event=calibration_warning message=" + kv_quote(w));
    log.info("event=calibrated file=" + kv_quote(a.calibrate_out) + " time_ref_s=" + format_real(base.time_ref_s) +
             " mem_ref_bytes=" + format_real(base.mem_ref_bytes));
    return kExitOk;
  }

  const auto base = load_calibration(require_path(cfg.eei.calibration, "--calibration (or eei.calibration)"));
  const auto weights = EeiWeights::parse(cfg.eei.weights);
  if (a.pi && !cfg.eei.scores.empty()) throw UsageError("give either --pi or --scores, not both");
  double pi = 0.0;
  if (a.pi) {
    pi = *a.pi;
  } else if (!cfg.eei.scores.empty()) {
    pi = pi_from_scores(cfg.eei.scores);
  } else {
    throw UsageError("missing --pi or --scores (or eei.scores)");
  }

  EeiInputs in;
  if (a.profile) {
    if (a.time_s || a.mem_bytes || a.flops || a.params) throw UsageError("--profile measures time and memory itself");
    CurveNetAdapter adapter(load_net(cfg));
    AllocationProbe probe;
    const auto res = a.resolution.empty() ? base.base : Resolution::parse(a.resolution);
    auto prof = profile_model(adapter, res, probe, popt);
    for (const auto& w : prof.warnings) log.info("event=profile_warning message=" + kv_quote(w));
    in = prof.inputs;
  } else {
    if (!a.time_s || !a.mem_bytes) throw UsageError("need --time-s and --mem-bytes, or --profile");
    if (a.flops.has_value() != a.params.has_value()) throw UsageError("--flops and --params go together");
    in.time_model_s = *a.time_s;
    in.mem_model_bytes = *a.mem_bytes;
    in.flops_model = a.flops;
    in.params_model = a.params;
    in.resolution = a.resolution.empty() ? base.base : Resolution::parse(a.resolution);
  }
  in.pi = pi;
  const auto rep = eei_score(in, base, weights);
  write_report_table(out, in, rep);
  if (!a.report_csv.empty()) {
    std::ofstream csv(a.report_csv, std::ios::trunc);
    if (!csv) throw IoError("cannot write " + a.report_csv);
    write_report_csv_header(csv);
    write_report_csv_row(csv, in, rep);
  }
  log.info("event=eei resolution=" + in.resolution.str() + " e_norm=" + format_real(rep.e_norm) +
           " eei=" + format_real(rep.eei) + " fallback=" + (rep.fallback ? "1" : "0"));
  return kExitOk;
}

inline int cmd_stats(const AppConfig& cfg, const std::string& csv_path, const std::string& hist_path,
                     std::ostream& out, const Log& log) {
  const auto rep = dataset_report(require_path(cfg.io.input_dir, "--input (or io.input_dir)"));
  if (csv_path.empty()) {
    write_stats_csv(out, rep);
  } else {
    std::ofstream f(csv_path, std::ios::trunc);
    if (!f) throw IoError("cannot write " + csv_path);
    write_stats_csv(f, rep);
  }
  if (!hist_path.empty()) {
    std::ofstream f(hist_path, std::ios::trunc);
    if (!f) throw IoError("cannot write " + hist_path);
    write_histograms_csv(f, rep);
  }
  log.info("event=stats images=" + std::to_string(rep.rows.size()));
  return kExitOk;
}

inline int cmd_split(const AppConfig& cfg, const std::string& ratios, const std::string& manifest,
                     std::ostream& out, const Log& log) {
  const auto m = make_splits(fs::path(require_path(cfg.io.input_dir, "--input (or io.input_dir)")),
                             SplitRatios::parse(ratios), cfg.train.seed);
  if (manifest.empty()) {
    write_manifest(out, m);
  } else {
    std::ofstream f(manifest, std::ios::trunc);
    if (!f) throw IoError("cannot write " + manifest);
    write_manifest(f, m);
  }
  log.info("event=split train=" + std::to_string(m.train.size()) + " val=" + std::to_string(m.val.size()) +
           " test=" + std::to_string(m.test.size()) + " seed=" + std::to_string(cfg.train.seed));
  return kExitOk;
}

inline int cmd_checkpoint_info(const std::string& path, std::ostream& out) {
  const auto info = read_checkpoint_info(path);
  out << "file=" << kv_quote(path) << " version=" << info.version << " layers=" << info.layer_count
      << " width=" << info.width << " iterations=" << info.iterations << " params=" << info.parameter_count
      << " macs_per_pixel=" << curve_macs_per_pixel(static_cast<int>(info.width)) << '\n';
  return kExitOk;
}

// ---- entry point -------------------------------------------------------------------

inline int run_cli(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Low-light enhancement toolkit: APA preprocessing, curve-net training and inference, EEI scoring"};
  app.set_version_flag("--version", "lowlight 1.0.0");
  app.require_subcommand(0, 1);

  std::string config_path;
  bool dump = false, quiet = false;
  std::optional<int> threads;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "Config file ([apa] [curve] [loss] [train] [eei] [io])");
  app.add_flag("--dump-config", dump, "Print the effective config and exit");
  app.add_flag("-q,--quiet", quiet, "Suppress progress logs");
  app.add_option("--threads", threads, "Cap worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--set", sets, "Override any config key: section.key=value (repeatable)");

  // string-valued flags that map onto config keys; applied after the config file
  std::deque<std::string> slots;
  std::vector<std::pair<std::string, std::string*>> overrides;
  auto bind = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
    overrides.emplace_back(key, &slots.emplace_back());
    return sub->add_option(flag, *overrides.back().second, help);
  };

  auto* apa = app.add_subcommand("apa", "Run adaptive pre-enhancement over a directory");
  bind(apa, "-i,--input", "io.input_dir", "Input image directory");
  bind(apa, "-o,--output", "io.augmented_dir", "Output directory");
  bool force = false;
  apa->add_flag("--force", force, "Rewrite outputs that already exist");

  auto* enh = app.add_subcommand("enhance", "Enhance an image or a directory with a trained checkpoint");
  bind(enh, "-i,--input", "io.input_dir", "Input image or directory");
  bind(enh, "-o,--output", "io.output_dir", "Output image or directory");
  bind(enh, "-c,--checkpoint", "curve.weights", "Weight file");
  bind(enh, "--patch", "io.patch_size", "Tile size for --tiled");
  bind(enh, "--overlap", "io.overlap", "Tile overlap for --tiled");
  bool tiled = false;
  enh->add_flag("--tiled", tiled, "Hann-blended tiled inference");

  auto* tr = app.add_subcommand("train", "Train the curve network");
  bind(tr, "--data", "io.input_dir", "Training images");
  bind(tr, "--augmented", "io.augmented_dir", "APA outputs with matching filenames");
  bind(tr, "--out", "io.output_dir", "Run directory for checkpoints and logs");
  bind(tr, "--val", "io.val_dir", "Validation images");
  bind(tr, "--scores", "eei.scores", "NIQE/BRISQUE scores CSV for EEI-based selection");
  bind(tr, "--calibration", "eei.calibration", "Calibration file for EEI-based selection");
  bind(tr, "--epochs", "train.epochs", "Epochs");
  bind(tr, "--lr", "train.base_lr", "Base learning rate");
  bind(tr, "--patch", "train.patch", "Training crop size");
  bind(tr, "--seed", "train.seed", "Random seed");
  std::string init;
  tr->add_option("--init", init, "Start from this checkpoint instead of random weights");

  auto* ee = app.add_subcommand("eei", "Compute the Edge Efficiency Index, or calibrate a baseline");
  EeiArgs ea;
  bind(ee, "--calibration", "eei.calibration", "Calibration file");
  bind(ee, "--weights", "eei.weights", "Weights t:c:r, on the 1 or the 10 scale");
  bind(ee, "--scores", "eei.scores", "NIQE/BRISQUE scores CSV (filename,niqe,brisque)");
  bind(ee, "-c,--checkpoint", "curve.weights", "Weight file for --profile or --calibrate-out");
  ee->add_option("--pi", ea.pi, "Perceptual index, instead of --scores")->check(CLI::NonNegativeNumber);
  ee->add_option("--resolution", ea.resolution, "Model resolution WxH (default: the baseline's)");
  ee->add_option("--time-s", ea.time_s, "Measured inference time in seconds");
  ee->add_option("--mem-bytes", ea.mem_bytes, "Measured peak memory in bytes");
  ee->add_option("--flops", ea.flops, "Model FLOPs (omit when profiling failed)");
  ee->add_option("--params", ea.params, "Model parameter count");
  ee->add_flag("--profile", ea.profile, "Measure the checkpoint at --resolution instead of taking numbers");
  ee->add_option("--report", ea.report_csv, "Also write the report as CSV");
  ee->add_option("--calibrate-out", ea.calibrate_out, "Calibrate the curve net as baseline and write this file");
  ee->add_option("--base-resolution", ea.base_resolution, "Resolution used by --calibrate-out");

  auto* st = app.add_subcommand("stats", "Per-image statistics and histograms for a directory");
  bind(st, "-i,--input", "io.input_dir", "Image directory");
  std::string stats_csv, hist_csv;
  st->add_option("-o,--output", stats_csv, "Per-image CSV (default: stdout)");
  st->add_option("--histograms", hist_csv, "Histogram CSV");

  auto* sp = app.add_subcommand("split", "Deterministic train/val/test manifest");
  bind(sp, "-i,--input", "io.input_dir", "Image directory");
  bind(sp, "--seed", "train.seed", "Shuffle seed");
  std::string ratios = "8:1:1", manifest;
  sp->add_option("--ratios", ratios, "Ratios a:b:c");
  sp->add_option("-o,--output", manifest, "Manifest file (default: stdout)");

  auto* ci = app.add_subcommand("checkpoint-info", "Print the header of a weight file");
  std::string ckpt_path;
  ci->add_option("checkpoint", ckpt_path, "Weight file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  Log log(err, quiet);
  AppConfig cfg;
  try {
    if (!config_path.empty()) cfg = load_config(config_path);
    for (const auto& [key, slot] : overrides)
      if (!slot->empty()) set_config_value(cfg, key, *slot);
    if (tiled) cfg.io.tiled = true;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got '" + s + "'");
      set_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    if (threads) cfg.io.threads = *threads;
    cfg.validate();
  } catch (const std::exception& e) {
    log.error(std::string("event=error kind=config message=") + kv_quote(e.what()));
    return kExitUsage;
  }
  set_max_threads(cfg.io.threads);

  if (dump) {
    dump_config(out, cfg);
    return kExitOk;
  }
  if (app.get_subcommands().empty()) {
    err << app.help();
    return kExitUsage;
  }

  try {
    if (*apa) return cmd_apa(cfg, force, log);
    if (*enh) return cmd_enhance(cfg, log);
    if (*tr) return cmd_train(cfg, init, err, log, quiet);
    if (*ee) return cmd_eei(cfg, ea, out, log);
    if (*st) return cmd_stats(cfg, stats_csv, hist_csv, out, log);
    if (*sp) return cmd_split(cfg, ratios, manifest, out, log);
    if (*ci) return cmd_checkpoint_info(ckpt_path, out);
  } catch (const UsageError& e) {
    log.error(std::string("event=error kind=usage message=") + kv_quote(e.what()));
    return kExitUsage;
  } catch (const ConfigError& e) {
    log.error(std::string("event=error kind=config message=") + kv_quote(e.what()));
    return kExitUsage;
  } catch (const std::exception& e) {
    log.error(std::string("event=error kind=runtime message=") + kv_quote(e.what()));
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace lowlight::cli
