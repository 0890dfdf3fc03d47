#pragma once

// Measurement side of the EEI harness: model adapters, a memory probe, the
// baseline calibration and per-resolution profiling with a tiled fallback.

#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "lowlight/alloc_tracker.hpp"
#include "lowlight/curve.hpp"
#include "lowlight/eei.hpp"
#include "lowlight/parallel.hpp"
#include "lowlight/patches.hpp"

namespace lowlight {

/// Thrown by an adapter that cannot process a frame of the requested size.
class CapacityExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ProfilingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Complexity {
  double flops = 0.0;
  double params = 0.0;
};

class ModelAdapter {
 public:
  virtual ~ModelAdapter() = default;
  virtual std::string name() const = 0;
  virtual Image run(const Image& input) = 0;
  /// nullopt when the analytic count is unavailable (profiling failure).
  virtual std::optional<Complexity> complexity(Resolution res) const = 0;
  /// Adapters that know their own working set may report it instead of the probe.
  virtual std::optional<double> workspace_bytes(Resolution) const { return std::nullopt; }
};

class MemoryProbe {
 public:
  virtual ~MemoryProbe() = default;
  virtual void begin() = 0;
  /// Peak bytes above the level seen at begin().
  virtual double end() = 0;
};

/// Uses the global allocation counters; reads zero unless alloc_hooks.hpp is linked in.
class AllocationProbe : public MemoryProbe {
 public:
  void begin() override {
    baseline_ = alloc::current_bytes();
    alloc::reset_peak();
  }
  double end() override { return static_cast<double>(std::max<std::int64_t>(0, alloc::peak_bytes() - baseline_)); }

 private:
  std::int64_t baseline_ = 0;
};

struct ProfileOptions {
  int warmup = 3;
  int runs = 10;
  int patch = kDefaultPatchSize;
  int overlap = kDefaultPatchOverlap;
  std::uint64_t seed = 7;
  double variance_warning = 0.2;  // relative std dev that triggers a warning
};

struct ProfileResult {
  EeiInputs inputs;  // pi left at zero
  double time_stddev_s = 0.0;
  std::vector<std::string> warnings;
};

namespace profiling_detail {

inline Image random_frame(Resolution r, std::uint64_t seed) {
  Image img(r.width, r.height, 3);
  std::mt19937_64 rng(seed);
  for (auto& v : img.storage()) v = static_cast<float>(static_cast<double>(rng() >> 11) * 0x1.0p-53);
  return img;
}

struct ThreadCap {
  int saved;
  ThreadCap() : saved(max_threads()) { set_max_threads(1); }
  ~ThreadCap() { set_max_threads(saved); }
};

template <class Fn>
std::pair<double, double> time_runs(Fn&& fn, int warmup, int runs) {
  for (int i = 0; i < warmup; ++i) fn();
  std::vector<double> t;
  t.reserve(runs);
  for (int i = 0; i < runs; ++i) {
    const auto a = std::chrono::steady_clock::now();
    fn();
    const auto b = std::chrono::steady_clock::now();
    t.push_back(std::chrono::duration<double>(b - a).count());
  }
  double mean = 0.0;
  for (double v : t) mean += v;
  mean /= static_cast<double>(t.size());
  double var = 0.0;
  for (double v : t) var += (v - mean) * (v - mean);
  var /= static_cast<double>(t.size());
  return {mean, std::sqrt(var)};
}

template <class Fn>
double measure_peak(MemoryProbe& probe, Fn&& fn) {
  probe.begin();
  fn();
  return probe.end();
}

inline Image run_tiled(ModelAdapter& adapter, const Image& frame, int patch, int overlap) {
  const auto grid = plan_patches(frame.width(), frame.height(), patch, overlap);
  BlendAccumulator acc(frame.width(), frame.height(), 3, grid.patch_size);
  for (const auto& o : grid.origins) {
    acc.add(o, adapter.run(crop(frame, o.x, o.y, grid.patch_size, grid.patch_size)));
  }
  return acc.finish<float>();
}

inline void check_options(const ProfileOptions& o) {
  if (o.warmup < 0 || o.runs < 1) throw InvalidInput("profiling: need warmup >= 0 and runs >= 1");
}

}  // namespace profiling_detail

/// Times and sizes one model at one resolution. Falls back to 256/64 tiles
/// when the adapter declares the full frame beyond its capacity.
inline ProfileResult profile_model(ModelAdapter& adapter, Resolution res, MemoryProbe& probe,
                                   const ProfileOptions& opt = {}) {
  using namespace profiling_detail;
  check_options(opt);
  const Image frame = random_frame(res, opt.seed);
  profiling_detail::ThreadCap cap;
  ProfileResult out;
  out.inputs.resolution = res;

  std::function<void()> body = [&] { (void)adapter.run(frame); };
  try {
    body();
  } catch (const CapacityExceeded&) {
    out.inputs.tiled = true;
    body = [&] { (void)run_tiled(adapter, frame, opt.patch, opt.overlap); };
    try {
      body();
    } catch (const std::exception& e) {
      throw ProfilingError(adapter.name() + ": full-frame and tiled paths both failed at " + res.str() + ": " +
                           e.what());
    }
  } catch (const std::exception& e) {
    throw ProfilingError(adapter.name() + ": inference failed at " + res.str() + ": " + e.what());
  }

  const double peak = measure_peak(probe, body);
  const auto [mean, sd] = time_runs(body, opt.warmup, opt.runs);
  out.inputs.time_model_s = mean;
  out.time_stddev_s = sd;
  if (sd > opt.variance_warning * mean) {
    out.warnings.push_back("timing stddev " + format_real(sd) + " s exceeds " +
                           format_real(100 * opt.variance_warning) + "% of mean");
  }
  const auto self = adapter.workspace_bytes(res);
  out.inputs.mem_model_bytes = self ? *self : peak;
  if (!(out.inputs.mem_model_bytes > 0)) {
    throw ProfilingError(adapter.name() + ": no memory measurement (probe read zero and no self-report)");
  }
  if (const auto c = adapter.complexity(res)) {
    out.inputs.flops_model = c->flops;
    out.inputs.params_model = c->params;
  }
  return out;
}

/// Measures the designated baseline adapter at the base resolution.
inline CalibrationBaseline calibrate(ModelAdapter& baseline, MemoryProbe& probe, Resolution base = kUhdResolution,
                                     const ProfileOptions& opt = {}) {
  using namespace profiling_detail;
  check_options(opt);
  const Image frame = random_frame(base, opt.seed);
  profiling_detail::ThreadCap cap;
  auto body = [&] { (void)baseline.run(frame); };
  CalibrationBaseline c;
  c.device_label = baseline.name();
  c.base = base;
  double peak = 0.0;
  std::pair<double, double> timing;
  try {
    peak = measure_peak(probe, body);
    timing = time_runs(body, opt.warmup, opt.runs);
  } catch (const std::exception& e) {
    throw CalibrationError(baseline.name() + ": baseline run failed: " + e.what());
  }
  c.time_ref_s = timing.first;
  if (timing.second > opt.variance_warning * timing.first) {
    c.warnings.push_back("timing stddev " + format_real(timing.second) + " s exceeds " +
                         format_real(100 * opt.variance_warning) + "% of mean");
  }
  const auto self = baseline.workspace_bytes(base);
  c.mem_ref_bytes = self ? *self : peak;
  if (!(c.mem_ref_bytes > 0)) throw CalibrationError(baseline.name() + ": no memory measurement");
  if (const auto cx = baseline.complexity(base)) {
    c.flops_ref = cx->flops;
    c.params_ref = cx->params;
  }
  return c;
}

/// The enhancement network itself; FLOPs are counted as multiply-accumulates.
class CurveNetAdapter : public ModelAdapter {
 public:
  explicit CurveNetAdapter(CurveNet<float> net, double max_pixels = 0) : net_(std::move(net)), max_pixels_(max_pixels) {}

  std::string name() const override { return "curvenet-c" + std::to_string(net_.width()); }

  Image run(const Image& input) override {
    if (max_pixels_ > 0 && static_cast<double>(input.plane_size()) > max_pixels_) {
      throw CapacityExceeded(name() + ": frame exceeds " + format_real(max_pixels_) + " pixels");
    }
    return enhance(net_, input);
  }

  std::optional<Complexity> complexity(Resolution res) const override {
    return Complexity{static_cast<double>(curve_macs_per_pixel(net_.width())) * res.pixels(),
                      static_cast<double>(net_.parameter_count())};
  }

  const CurveNet<float>& net() const { return net_; }

 private:
  CurveNet<float> net_;
  double max_pixels_;
};

}  // namespace lowlight
