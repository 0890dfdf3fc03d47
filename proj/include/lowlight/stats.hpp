#pragma once

// Per-image distribution metrics, dataset reports and split manifests.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "lowlight/color.hpp"
#include "lowlight/image.hpp"
#include "lowlight/image_io.hpp"
#include "lowlight/parallel.hpp"

namespace lowlight {

struct ImageStats {
  double mean_luminance = 0.0;
  double contrast = 0.0;   // std dev of luminance
  double entropy = 0.0;    // bits, 256-bin gray histogram
  double sharpness = 0.0;  // variance of the 3x3 Laplacian of luminance
  std::array<double, 3> mean_lab{};  // encoded L/100, 0.5 + a/255, 0.5 + b/255
};

/// BT.601 luma, the usual grayscale conversion.
template <class T>
std::vector<double> gray_levels(const BasicImage<T>& img) {
  require_channels(img.channels(), 3, "gray_levels");
  std::vector<double> y(img.plane_size());
  auto r = img.plane(0), g = img.plane(1), b = img.plane(2);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = 0.299 * static_cast<double>(r[i]) + 0.587 * static_cast<double>(g[i]) + 0.114 * static_cast<double>(b[i]);
  }
  return y;
}

inline std::array<std::uint64_t, 256> gray_histogram(const std::vector<double>& y) {
  std::array<std::uint64_t, 256> h{};
  for (double v : y) {
    const long bin = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
    ++h[static_cast<std::size_t>(bin)];
  }
  return h;
}

inline double shannon_entropy(const std::array<std::uint64_t, 256>& h) {
  std::uint64_t n = 0;
  for (auto c : h) n += c;
  if (n == 0) return 0.0;
  double e = 0.0;
  for (auto c : h) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(n);
    e -= p * std::log2(p);
  }
  return std::max(0.0, e);
}

template <class T>
ImageStats compute_stats(const BasicImage<T>& img) {
  const auto y = gray_levels(img);
  const int w = img.width(), h = img.height();
  ImageStats s;
  const double n = static_cast<double>(y.size());
  for (double v : y) s.mean_luminance += v;
  s.mean_luminance /= n;
  double var = 0.0;
  for (double v : y) var += (v - s.mean_luminance) * (v - s.mean_luminance);
  s.contrast = std::sqrt(var / n);
  s.entropy = shannon_entropy(gray_histogram(y));

  if (w >= 3 && h >= 3) {
    std::vector<double> lap;
    lap.reserve(static_cast<std::size_t>(w - 2) * (h - 2));
    for (int yy = 1; yy + 1 < h; ++yy)
      for (int xx = 1; xx + 1 < w; ++xx) {
        const auto at = [&](int x, int yv) { return y[static_cast<std::size_t>(yv) * w + x]; };
        lap.push_back(at(xx - 1, yy) + at(xx + 1, yy) + at(xx, yy - 1) + at(xx, yy + 1) - 4.0 * at(xx, yy));
      }
    double m = 0.0;
    for (double v : lap) m += v;
    m /= static_cast<double>(lap.size());
    double sv = 0.0;
    for (double v : lap) sv += (v - m) * (v - m);
    s.sharpness = sv / static_cast<double>(lap.size());
  }

  auto r = img.plane(0), g = img.plane(1), b = img.plane(2);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto lab = rgb_to_lab_px(r[i], g[i], b[i]);
    for (int c = 0; c < 3; ++c) s.mean_lab[c] += lab[c];
  }
  for (auto& v : s.mean_lab) v /= n;
  return s;
}

// ---- dataset report ------------------------------------------------------------

inline constexpr int kHistogramBins = 50;

struct MetricHistogram {
  std::string metric;
  double lo = 0.0;
  double hi = 1.0;
  std::array<std::uint64_t, kHistogramBins> counts{};

  void add(double v) {
    const double t = (v - lo) / (hi - lo);
    const int bin = std::clamp(static_cast<int>(std::floor(t * kHistogramBins)), 0, kHistogramBins - 1);
    ++counts[static_cast<std::size_t>(bin)];
  }
};

struct DatasetReport {
  std::vector<std::pair<std::string, ImageStats>> rows;  // sorted by filename
  std::vector<MetricHistogram> histograms;
};

inline std::vector<std::pair<std::string, double>> stats_fields(const ImageStats& s) {
  return {{"luminance", s.mean_luminance}, {"contrast", s.contrast}, {"entropy", s.entropy},
          {"sharpness", s.sharpness},      {"lab_l", s.mean_lab[0]},  {"lab_a", s.mean_lab[1]},
          {"lab_b", s.mean_lab[2]}};
}

/// Fixed ranges per metric; sharpness has no natural bound and uses the observed range.
inline DatasetReport build_report(std::vector<std::pair<std::string, ImageStats>> rows) {
  if (rows.empty()) throw InvalidInput("dataset_report: no images");
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  DatasetReport rep;
  double smin = rows.front().second.sharpness, smax = smin;
  for (const auto& [_, s] : rows) {
    smin = std::min(smin, s.sharpness);
    smax = std::max(smax, s.sharpness);
  }
  if (!(smax > smin)) smax = smin + 1.0;
  const std::map<std::string, std::pair<double, double>> ranges{
      {"luminance", {0.0, 1.0}}, {"contrast", {0.0, 0.5}}, {"entropy", {0.0, 8.0}}, {"sharpness", {smin, smax}},
      {"lab_l", {0.0, 1.0}},     {"lab_a", {0.0, 1.0}},    {"lab_b", {0.0, 1.0}}};
  for (const auto& [name, _] : stats_fields(ImageStats{})) {
    MetricHistogram hist;
    hist.metric = name;
    hist.lo = ranges.at(name).first;
    hist.hi = ranges.at(name).second;
    rep.histograms.push_back(hist);
  }
  for (const auto& [_, s] : rows) {
    const auto f = stats_fields(s);
    for (std::size_t i = 0; i < f.size(); ++i) rep.histograms[i].add(f[i].second);
  }
  rep.rows = std::move(rows);
  return rep;
}

inline DatasetReport dataset_report(const std::filesystem::path& dir) {
  const auto files = list_images(dir);
  if (files.empty()) throw InvalidInput("dataset_report: no images in " + dir.string());
  std::vector<std::pair<std::string, ImageStats>> rows(files.size());
  std::vector<std::string> errors(files.size());
  parallel_for(0, static_cast<int>(files.size()), [&](int i) {
    try {
      rows[i] = {files[i].filename().string(), compute_stats(load_image(files[i]))};
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) throw IoError(e);
  return build_report(std::move(rows));
}

inline void write_stats_csv(std::ostream& out, const DatasetReport& rep) {
  out << "filename,luminance,contrast,entropy,sharpness,lab_l,lab_a,lab_b\n";
  out << std::setprecision(10);
  for (const auto& [name, s] : rep.rows) {
    out << name;
    for (const auto& [_, v] : stats_fields(s)) out << ',' << v;
    out << '\n';
  }
}

/// Long format: metric,bin,lo,hi,count.
inline void write_histograms_csv(std::ostream& out, const DatasetReport& rep) {
  out << "metric,bin,lo,hi,count\n";
  out << std::setprecision(10);
  for (const auto& h : rep.histograms) {
    const double step = (h.hi - h.lo) / kHistogramBins;
    for (int b = 0; b < kHistogramBins; ++b) {
      out << h.metric << ',' << b << ',' << h.lo + step * b << ',' << h.lo + step * (b + 1) << ','
          << h.counts[static_cast<std::size_t>(b)] << '\n';
    }
  }
}

// ---- splits --------------------------------------------------------------------

struct SplitManifest {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
  bool operator==(const SplitManifest&) const = default;
};

struct SplitRatios {
  double train = 8.0;
  double val = 1.0;
  double test = 1.0;

  static SplitRatios parse(const std::string& text) {
    std::array<double, 3> v{};
    std::size_t start = 0;
    for (int i = 0; i < 3; ++i) {
      const auto colon = text.find(':', start);
      if ((i < 2) == (colon == std::string::npos)) throw InvalidInput("split ratios must look like a:b:c");
      const auto tok = text.substr(start, colon == std::string::npos ? std::string::npos : colon - start);
      std::size_t used = 0;
      try {
        v[i] = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (tok.empty() || used != tok.size() || v[i] < 0) throw InvalidInput("split ratios must look like a:b:c");
      start = colon + 1;
    }
    if (!(v[0] + v[1] + v[2] > 0)) throw InvalidInput("split ratios must have a positive sum");
    return {v[0], v[1], v[2]};
  }
};

inline constexpr std::size_t kMinSplitImages = 10;

/// Seeded shuffle of the sorted names; sizes floor(N*train) / floor(N*val) / remainder.
inline SplitManifest make_splits(std::vector<std::string> names, const SplitRatios& ratios = {},
                                 std::uint64_t seed = 2025) {
  if (names.size() < kMinSplitImages) {
    throw InvalidInput("make_splits: need at least " + std::to_string(kMinSplitImages) + " images, got " +
                       std::to_string(names.size()));
  }
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end()) throw InvalidInput("make_splits: duplicate names");
  std::mt19937_64 rng(seed);
  for (std::size_t i = names.size() - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(names[i], names[j]);
  }
  const double sum = ratios.train + ratios.val + ratios.test;
  const double n = static_cast<double>(names.size());
  // A small epsilon keeps exact products such as 1000 * 0.8 from flooring to 799.
  const auto n_train = static_cast<std::size_t>(std::floor(n * ratios.train / sum + 1e-9));
  const auto n_val = std::min(names.size() - n_train, static_cast<std::size_t>(std::floor(n * ratios.val / sum + 1e-9)));
  SplitManifest m;
  m.train.assign(names.begin(), names.begin() + static_cast<std::ptrdiff_t>(n_train));
  m.val.assign(names.begin() + static_cast<std::ptrdiff_t>(n_train),
               names.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  m.test.assign(names.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), names.end());
  return m;
}

inline SplitManifest make_splits(const std::filesystem::path& dir, const SplitRatios& ratios = {},
                                 std::uint64_t seed = 2025) {
  std::vector<std::string> names;
  for (const auto& p : list_images(dir)) names.push_back(p.filename().string());
  return make_splits(std::move(names), ratios, seed);
}

inline void write_manifest(std::ostream& out, const SplitManifest& m) {
  auto section = [&](const char* name, const std::vector<std::string>& files) {
    out << '[' << name << "]\n";
    for (const auto& f : files) out << f << '\n';
  };
  section("train", m.train);
  section("val", m.val);
  section("test", m.test);
}

inline SplitManifest read_manifest(std::istream& in) {
  SplitManifest m;
  std::vector<std::string>* cur = nullptr;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == "[train]") {
      cur = &m.train;
    } else if (line == "[val]") {
      cur = &m.val;
    } else if (line == "[test]") {
      cur = &m.test;
    } else if (!cur) {
      throw InvalidInput("manifest:" + std::to_string(lineno) + ": filename before any section header");
    } else {
      cur->push_back(line);
    }
  }
  return m;
}

}  // namespace lowlight
