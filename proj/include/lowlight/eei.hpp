#pragma once

// Edge Efficiency Index: EEI = PI * E_norm, where E_norm mixes time,
// complexity and memory ratios against a fixed 4K baseline.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lowlight/image.hpp"

namespace lowlight {

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Resolution {
  int width = 0;
  int height = 0;

  double pixels() const { return static_cast<double>(width) * static_cast<double>(height); }
  std::string str() const { return std::to_string(width) + "x" + std::to_string(height); }
  bool operator==(const Resolution&) const = default;

  /// "WxH"
  static Resolution parse(const std::string& text) {
    const auto x = text.find_first_of("xX");
    Resolution r;
    if (x == std::string::npos) throw InvalidInput("resolution must look like WIDTHxHEIGHT, got '" + text + "'");
    const auto* b = text.data();
    auto [p1, e1] = std::from_chars(b, b + x, r.width);
    auto [p2, e2] = std::from_chars(b + x + 1, b + text.size(), r.height);
    if (e1 != std::errc{} || e2 != std::errc{} || p1 != b + x || p2 != b + text.size() || r.width < 1 ||
        r.height < 1) {
      throw InvalidInput("resolution must look like WIDTHxHEIGHT, got '" + text + "'");
    }
    return r;
  }
};

inline constexpr Resolution kUhdResolution{3840, 2160};

struct CalibrationBaseline {
  std::string device_label = "unknown";
  double time_ref_s = 0.0;
  std::optional<double> flops_ref;
  std::optional<double> params_ref;
  double mem_ref_bytes = 0.0;
  Resolution base = kUhdResolution;
  std::vector<std::string> warnings;

  bool has_complexity() const { return flops_ref.has_value(); }

  void validate() const {
    if (!(time_ref_s > 0)) throw InvalidInput("calibration: time_ref_s must be positive");
    if (!(mem_ref_bytes > 0)) throw InvalidInput("calibration: mem_ref_bytes must be positive");
    if (flops_ref.has_value() != params_ref.has_value()) {
      throw InvalidInput("calibration: flops_ref and params_ref must be both present or both absent");
    }
    if (flops_ref && (!(*flops_ref > 0) || !(*params_ref > 0))) {
      throw InvalidInput("calibration: flops_ref and params_ref must be positive");
    }
    if (base.width < 1 || base.height < 1) throw InvalidInput("calibration: base resolution must be positive");
  }
};

struct EeiInputs {
  double time_model_s = 0.0;
  Resolution resolution = kUhdResolution;
  std::optional<double> flops_model;  // absent: profiling failed
  std::optional<double> params_model;
  double mem_model_bytes = 0.0;
  double pi = 0.0;
  bool tiled = false;  // timing came from the patch fallback

  void validate() const {
    if (!(time_model_s > 0)) throw InvalidInput("eei: model time must be positive");
    if (!(mem_model_bytes > 0)) throw InvalidInput("eei: model memory must be positive");
    if (!(pi >= 0)) throw InvalidInput("eei: perceptual index must be >= 0");
    if (resolution.width < 1 || resolution.height < 1) throw InvalidInput("eei: zero-pixel resolution");
  }
};

struct EeiWeights {
  double time = 0.8;
  double complexity = 0.1;
  double resource = 0.1;
  double fallback_time = 0.9;
  double fallback_resource = 0.1;

  /// Scales the main weights to sum to one. Accepts either the 1 or the 10 budget.
  EeiWeights normalized() const {
    const double s = time + complexity + resource;
    if (!(s > 0) || time < 0 || complexity < 0 || resource < 0) {
      throw InvalidInput("eei weights must be non-negative with a positive sum");
    }
    EeiWeights out = *this;
    out.time /= s;
    out.complexity /= s;
    out.resource /= s;
    return out;
  }

  /// "t:c:r", e.g. "8:1:1" or "0.8:0.1:0.1".
  static EeiWeights parse(const std::string& text) {
    std::vector<double> parts;
    std::size_t start = 0;
    while (true) {
      const auto colon = text.find(':', start);
      const std::string tok = text.substr(start, colon == std::string::npos ? std::string::npos : colon - start);
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (tok.empty() || used != tok.size()) throw InvalidInput("eei weights must look like t:c:r, got '" + text + "'");
      parts.push_back(v);
      if (colon == std::string::npos) break;
      start = colon + 1;
    }
    if (parts.size() != 3) throw InvalidInput("eei weights must look like t:c:r, got '" + text + "'");
    EeiWeights w;
    w.time = parts[0];
    w.complexity = parts[1];
    w.resource = parts[2];
    return w.normalized();
  }

  std::string str() const {
    std::ostringstream os;
    os << time << ':' << complexity << ':' << resource;
    return os.str();
  }
};

struct EeiReport {
  double tf = 0.0;
  std::optional<double> cf;
  double rf = 0.0;
  double e_norm = 0.0;
  double eei = 0.0;
  double pi = 0.0;
  EeiWeights weights;  // normalized
  bool fallback = false;
};

inline double time_factor(const EeiInputs& in, const CalibrationBaseline& base) {
  if (!(in.resolution.pixels() > 0) || !(base.base.pixels() > 0)) throw InvalidInput("time_factor: zero pixels");
  if (!(in.time_model_s > 0) || !(base.time_ref_s > 0)) throw InvalidInput("time_factor: times must be positive");
  return (in.time_model_s / base.time_ref_s) * (base.base.pixels() / in.resolution.pixels());
}

inline std::optional<double> complexity_factor(const EeiInputs& in, const CalibrationBaseline& base) {
  if (!in.flops_model || !in.params_model || !base.flops_ref || !base.params_ref) return std::nullopt;
  return 0.5 * (*in.flops_model / *base.flops_ref) + 0.5 * (*in.params_model / *base.params_ref);
}

/// Always against the 4K baseline memory, whatever the model resolution.
inline double resource_factor(const EeiInputs& in, const CalibrationBaseline& base) {
  if (!(base.mem_ref_bytes > 0)) throw InvalidInput("resource_factor: baseline memory must be positive");
  return in.mem_model_bytes / base.mem_ref_bytes;
}

/// The factor combination alone, for callers that already hold TF/CF/RF.
inline EeiReport eei_from_factors(double tf, std::optional<double> cf, double rf, double pi,
                                  const EeiWeights& weights) {
  EeiReport r;
  r.tf = tf;
  r.cf = cf;
  r.rf = rf;
  r.pi = pi;
  r.weights = weights.normalized();
  r.fallback = !cf.has_value();
  if (cf) {
    r.e_norm = r.weights.time * tf + r.weights.complexity * *cf + r.weights.resource * rf;
  } else {
    r.e_norm = r.weights.fallback_time * tf + r.weights.fallback_resource * rf;
  }
  r.eei = pi * r.e_norm;
  return r;
}

inline EeiReport eei_score(const EeiInputs& in, const CalibrationBaseline& base, const EeiWeights& weights = {}) {
  in.validate();
  base.validate();
  return eei_from_factors(time_factor(in, base), complexity_factor(in, base), resource_factor(in, base), in.pi,
                          weights);
}

// ---- perceptual index --------------------------------------------------------

struct ScoreRow {
  std::string filename;
  double niqe = 0.0;
  double brisque = 0.0;
  double pi() const { return 0.5 * (niqe + brisque); }
};

namespace eei_detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline std::optional<double> to_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t used = 0;
  try {
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace eei_detail

/// CSV rows "filename,niqe,brisque". A first line whose numeric fields do not
/// parse is taken as a header; blank lines and '#' comments are skipped.
inline std::vector<ScoreRow> parse_scores(std::istream& in, const std::string& where = "scores") {
  std::vector<ScoreRow> rows;
  std::string line;
  int lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = eei_detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto f = eei_detail::split_csv(t);
    const bool was_first = first;
    first = false;
    if (f.size() == 3) {
      const auto n = eei_detail::to_double(f[1]);
      const auto b = eei_detail::to_double(f[2]);
      if (n && b) {
        if (*n < 0 || *b < 0) throw InvalidInput(where + ":" + std::to_string(lineno) + ": negative score");
        rows.push_back({f[0], *n, *b});
        continue;
      }
      if (was_first) continue;  // header
    }
    throw InvalidInput(where + ":" + std::to_string(lineno) + ": expected 'filename,niqe,brisque'");
  }
  if (rows.empty()) throw InvalidInput(where + ": no score rows");
  return rows;
}

/// Mean over images of the per-image (NIQE + BRISQUE) / 2.
inline double pi_from_rows(const std::vector<ScoreRow>& rows) {
  if (rows.empty()) throw InvalidInput("pi: no score rows");
  double s = 0.0;
  for (const auto& r : rows) s += r.pi();
  return s / static_cast<double>(rows.size());
}

inline double pi_from_scores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scores file " + path.string());
  return pi_from_rows(parse_scores(in, path.string()));
}

// ---- calibration file ---------------------------------------------------------

inline constexpr int kCalibrationVersion = 1;

/// Shortest text that parses back to the same double.
inline std::string format_real(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

inline void write_calibration(std::ostream& out, const CalibrationBaseline& c) {
  c.validate();
  out << "# lowlight calibration baseline\n";
  out << "version = " << kCalibrationVersion << '\n';
  out << "device_label = " << c.device_label << '\n';
  out << "time_ref_s = " << format_real(c.time_ref_s) << '\n';
  out << "flops_ref = " << (c.flops_ref ? format_real(*c.flops_ref) : "none") << '\n';
  out << "params_ref = " << (c.params_ref ? format_real(*c.params_ref) : "none") << '\n';
  out << "mem_ref_bytes = " << format_real(c.mem_ref_bytes) << '\n';
  out << "base_w = " << c.base.width << '\n';
  out << "base_h = " << c.base.height << '\n';
  for (const auto& w : c.warnings) out << "warning = " << w << '\n';
}

inline void save_calibration(const std::filesystem::path& path, const CalibrationBaseline& c) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write calibration file " + path.string());
  write_calibration(out, c);
  if (!out) throw IoError("short write to " + path.string());
}

inline CalibrationBaseline parse_calibration(std::istream& in, const std::string& where = "calibration") {
  CalibrationBaseline c;
  std::map<std::string, std::string> seen;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw CalibrationError(where + ":" + std::to_string(lineno) + ": " + msg);
  };
  auto real = [&](const std::string& v) {
    const auto d = eei_detail::to_double(v);
    if (!d) fail("expected a number, got '" + v + "'");
    return *d;
  };
  auto optional_real = [&](const std::string& v) -> std::optional<double> {
    if (v == "none" || v.empty()) return std::nullopt;
    return real(v);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = eei_detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) fail("expected 'key = value'");
    const auto key = eei_detail::trim(t.substr(0, eq));
    const auto value = eei_detail::trim(t.substr(eq + 1));
    if (key != "warning" && !seen.emplace(key, value).second) fail("duplicate key '" + key + "'");
    if (key == "version") {
      if (value != std::to_string(kCalibrationVersion)) fail("unsupported calibration version " + value);
    } else if (key == "device_label") {
      c.device_label = value;
    } else if (key == "time_ref_s") {
      c.time_ref_s = real(value);
    } else if (key == "flops_ref") {
      c.flops_ref = optional_real(value);
    } else if (key == "params_ref") {
      c.params_ref = optional_real(value);
    } else if (key == "mem_ref_bytes") {
      c.mem_ref_bytes = real(value);
    } else if (key == "base_w") {
      c.base.width = static_cast<int>(real(value));
    } else if (key == "base_h") {
      c.base.height = static_cast<int>(real(value));
    } else if (key == "warning") {
      c.warnings.push_back(value);
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  if (!seen.count("version")) throw CalibrationError(where + ": missing version");
  for (const char* k : {"time_ref_s", "mem_ref_bytes"}) {
    if (!seen.count(k)) throw CalibrationError(where + ": missing " + std::string(k));
  }
  try {
    c.validate();
  } catch (const InvalidInput& e) {
    throw CalibrationError(where + ": " + e.what());
  }
  return c;
}

inline CalibrationBaseline load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open calibration file " + path.string());
  return parse_calibration(in, path.string());
}

// ---- report output -------------------------------------------------------------

inline void write_report_csv_header(std::ostream& out) {
  out << "resolution,time_s,flops,params,mem_bytes,pi,tiled,tf,cf,rf,w_t,w_c,w_r,fallback,e_norm,eei\n";
}

inline void write_report_csv_row(std::ostream& out, const EeiInputs& in, const EeiReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string(); };
  const double wt = r.fallback ? r.weights.fallback_time : r.weights.time;
  const double wc = r.fallback ? 0.0 : r.weights.complexity;
  const double wr = r.fallback ? r.weights.fallback_resource : r.weights.resource;
  out << in.resolution.str() << ',' << format_real(in.time_model_s) << ',' << opt(in.flops_model) << ','
      << opt(in.params_model) << ',' << format_real(in.mem_model_bytes) << ',' << format_real(r.pi) << ','
      << (in.tiled ? 1 : 0) << ',' << format_real(r.tf) << ',' << opt(r.cf) << ',' << format_real(r.rf) << ','
      << format_real(wt) << ',' << format_real(wc) << ',' << format_real(wr) << ',' << (r.fallback ? 1 : 0) << ','
      << format_real(r.e_norm) << ',' << format_real(r.eei) << '\n';
}

inline void write_report_table(std::ostream& out, const EeiInputs& in, const EeiReport& r) {
  std::ostringstream os;
  os << std::fixed;
  os << "resolution  " << in.resolution.str() << (in.tiled ? "  (tiled fallback)" : "") << '\n';
  os << std::setprecision(3);
  os << "TF          " << r.tf << '\n';
  os << "CF          ";
  if (r.cf) {
    os << *r.cf << '\n';
  } else {
    os << "n/a (profiling failed)\n";
  }
  os << "RF          " << r.rf << '\n';
  os << "weights     ";
  if (r.fallback) {
    os << r.weights.fallback_time << " : - : " << r.weights.fallback_resource << " (fallback)\n";
  } else {
    os << r.weights.time << " : " << r.weights.complexity << " : " << r.weights.resource << '\n';
  }
  os << std::setprecision(4) << "E_norm      " << r.e_norm << '\n';
  os << std::setprecision(2) << "PI          " << r.pi << '\n';
  os << "EEI         " << r.eei << '\n';
  out << os.str();
}

}  // namespace lowlight
