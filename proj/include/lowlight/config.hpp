#pragma once

// Application config: a TOML-style file of [section] blocks holding
// key = value lines. Every key has a default; unknown keys are errors.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lowlight/apa.hpp"
#include "lowlight/curve.hpp"
#include "lowlight/eei.hpp"
#include "lowlight/losses.hpp"
#include "lowlight/optim.hpp"

namespace lowlight {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CurveSettings {
  int width = kDefaultCurveWidth;
  int iterations = kDefaultCurveIterations;
  std::string weights;  // checkpoint path
  bool operator==(const CurveSettings&) const = default;
};

struct EeiSettings {
  std::string weights = "8:1:1";
  std::string calibration;
  std::string scores;
  int warmup = 3;
  int runs = 10;
  bool operator==(const EeiSettings&) const = default;
};

struct IoSettings {
  std::string input_dir;
  std::string output_dir;
  std::string augmented_dir;
  std::string val_dir;
  int patch_size = kDefaultPatchSize;
  int overlap = kDefaultPatchOverlap;
  bool tiled = false;
  int threads = 0;  // 0: all cores
  int jpeg_quality = 95;
  bool operator==(const IoSettings&) const = default;
};

struct AppConfig {
  ApaParams apa;
  CurveSettings curve;
  LossConfig loss;
  TrainConfig train = TrainConfig::desk_scale();
  EeiSettings eei;
  IoSettings io;
  bool operator==(const AppConfig&) const = default;

  void validate() const {
    apa.validate();
    loss.validate();
    train.validate();
    if (curve.width < 1 || curve.iterations < 1) throw InvalidInput("curve: width and iterations must be >= 1");
    (void)EeiWeights::parse(eei.weights);
    if (eei.warmup < 0 || eei.runs < 1) throw InvalidInput("eei: need warmup >= 0 and runs >= 1");
    if (io.patch_size < 2 || io.overlap < 0 || io.overlap >= io.patch_size) {
      throw InvalidInput("io: need patch_size >= 2 and 0 <= overlap < patch_size");
    }
    if (io.threads < 0) throw InvalidInput("io: threads must be >= 0");
    if (io.jpeg_quality < 1 || io.jpeg_quality > 100) throw InvalidInput("io: jpeg_quality must lie in [1, 100]");
  }
};

namespace config_detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

inline double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (v.empty() || used != v.size() || std::isnan(d)) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return d;
}

template <class I>
I parse_int(const std::string& key, const std::string& v) {
  I out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || p != v.data() + v.size()) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

inline std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + '"';
}

/// Strips an optional pair of double quotes (with \" and \\ escapes) or a trailing # comment.
inline std::string unquote(const std::string& key, const std::string& raw) {
  if (raw.empty() || raw[0] != '"') {
    const auto hash = raw.find('#');
    return trim(hash == std::string::npos ? raw : raw.substr(0, hash));
  }
  std::string out;
  std::size_t i = 1;
  for (; i < raw.size() && raw[i] != '"'; ++i) {
    if (raw[i] == '\\' && i + 1 < raw.size()) ++i;
    out += raw[i];
  }
  if (i >= raw.size()) throw ConfigError(key + ": unterminated string");
  const auto rest = trim(raw.substr(i + 1));
  if (!rest.empty() && rest[0] != '#') throw ConfigError(key + ": trailing characters after string");
  return out;
}

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const AppConfig&)> get;
  std::function<void(AppConfig&, const std::string&)> set;
  std::string full() const { return section + "." + key; }
};

template <class M>
Field real_field(std::string sec, std::string key, M member) {
  const std::string full = sec + "." + key;
  return {sec, key, [member](const AppConfig& c) { return format_real(member(const_cast<AppConfig&>(c))); },
          [member, full](AppConfig& c, const std::string& v) { member(c) = parse_real(full, v); }};
}

template <class M>
Field int_field(std::string sec, std::string key, M member) {
  const std::string full = sec + "." + key;
  return {sec, key, [member](const AppConfig& c) { return std::to_string(member(const_cast<AppConfig&>(c))); },
          [member, full](AppConfig& c, const std::string& v) {
            using I = std::remove_reference_t<decltype(member(c))>;
            member(c) = parse_int<I>(full, v);
          }};
}

template <class M>
Field bool_field(std::string sec, std::string key, M member) {
  const std::string full = sec + "." + key;
  return {sec, key, [member](const AppConfig& c) { return std::string(member(const_cast<AppConfig&>(c)) ? "true" : "false"); },
          [member, full](AppConfig& c, const std::string& v) { member(c) = parse_bool(full, v); }};
}

template <class M>
Field string_field(std::string sec, std::string key, M member) {
  return {sec, key, [member](const AppConfig& c) { return quote(member(const_cast<AppConfig&>(c))); },
          [member](AppConfig& c, const std::string& v) { member(c) = v; }};
}

inline const std::vector<Field>& fields() {
  static const std::vector<Field> all = [] {
    std::vector<Field> f;
#define LL_REAL(sec, key, expr) f.push_back(real_field(sec, key, [](AppConfig& c) -> auto& { return expr; }))
#define LL_INT(sec, key, expr) f.push_back(int_field(sec, key, [](AppConfig& c) -> auto& { return expr; }))
#define LL_BOOL(sec, key, expr) f.push_back(bool_field(sec, key, [](AppConfig& c) -> auto& { return expr; }))
#define LL_STR(sec, key, expr) f.push_back(string_field(sec, key, [](AppConfig& c) -> auto& { return expr; }))
    LL_INT("apa", "bilateral_d", c.apa.bilateral_d);
    LL_REAL("apa", "sigma_color", c.apa.sigma_color);
    LL_REAL("apa", "sigma_space", c.apa.sigma_space);
    LL_REAL("apa", "gamma_base", c.apa.gamma_base);
    LL_REAL("apa", "kappa", c.apa.kappa);
    LL_REAL("apa", "gamma_min", c.apa.gamma_min);
    LL_REAL("apa", "gamma_max", c.apa.gamma_max);
    LL_REAL("apa", "epsilon", c.apa.epsilon);
    LL_BOOL("apa", "clahe", c.apa.clahe_enabled);
    LL_REAL("apa", "clahe_clip", c.apa.clahe_clip);
    LL_INT("apa", "clahe_tiles", c.apa.clahe_tiles);
    LL_REAL("apa", "beta_red", c.apa.beta_red);
    LL_REAL("apa", "beta_sat", c.apa.beta_sat);
    LL_REAL("apa", "eta_supp", c.apa.eta_supp);

    LL_INT("curve", "width", c.curve.width);
    LL_INT("curve", "iterations", c.curve.iterations);
    LL_STR("curve", "weights", c.curve.weights);

    LL_REAL("loss", "lambda_tv", c.loss.lambda_tv);
    LL_REAL("loss", "lambda_spa", c.loss.lambda_spa);
    LL_REAL("loss", "lambda_col", c.loss.lambda_col);
    LL_REAL("loss", "lambda_int", c.loss.lambda_int);
    LL_INT("loss", "patch", c.loss.lint.patch);
    LL_REAL("loss", "e_dark", c.loss.lint.e_dark);
    LL_REAL("loss", "e_bright", c.loss.lint.e_bright);
    LL_REAL("loss", "e_global", c.loss.lint.e_global);
    LL_REAL("loss", "gamma_global", c.loss.lint.gamma_global);
    f.push_back({"loss", "luminance",
                 [](const AppConfig& c) {
                   return quote(c.loss.luminance == LuminanceMode::Bt601 ? "bt601" : "mean");
                 },
                 [](AppConfig& c, const std::string& v) {
                   if (v == "mean") c.loss.luminance = LuminanceMode::ChannelMean;
                   else if (v == "bt601") c.loss.luminance = LuminanceMode::Bt601;
                   else throw ConfigError("loss.luminance: expected mean or bt601, got '" + v + "'");
                 }});
    f.push_back({"loss", "curve_source",
                 [](const AppConfig& c) {
                   return quote(c.loss.curve_source == CurveSource::Augmented ? "augmented" : "input");
                 },
                 [](AppConfig& c, const std::string& v) {
                   if (v == "input") c.loss.curve_source = CurveSource::Input;
                   else if (v == "augmented") c.loss.curve_source = CurveSource::Augmented;
                   else throw ConfigError("loss.curve_source: expected input or augmented, got '" + v + "'");
                 }});

    LL_INT("train", "epochs", c.train.epochs);
    LL_REAL("train", "base_lr", c.train.base_lr);
    LL_INT("train", "warmup_epochs", c.train.warmup_epochs);
    LL_INT("train", "decay_every", c.train.decay_every);
    LL_REAL("train", "decay_factor", c.train.decay_factor);
    LL_REAL("train", "weight_decay", c.train.weight_decay);
    LL_INT("train", "micro_batch", c.train.micro_batch);
    LL_INT("train", "accum_steps", c.train.accum_steps);
    LL_REAL("train", "clip_norm", c.train.clip_norm);
    LL_INT("train", "patch", c.train.patch);
    LL_INT("train", "seed", c.train.seed);
    LL_INT("train", "validate_every", c.train.validate_every);

    LL_STR("eei", "weights", c.eei.weights);
    LL_STR("eei", "calibration", c.eei.calibration);
    LL_STR("eei", "scores", c.eei.scores);
    LL_INT("eei", "warmup", c.eei.warmup);
    LL_INT("eei", "runs", c.eei.runs);

    LL_STR("io", "input_dir", c.io.input_dir);
    LL_STR("io", "output_dir", c.io.output_dir);
    LL_STR("io", "augmented_dir", c.io.augmented_dir);
    LL_STR("io", "val_dir", c.io.val_dir);
    LL_INT("io", "patch_size", c.io.patch_size);
    LL_INT("io", "overlap", c.io.overlap);
    LL_BOOL("io", "tiled", c.io.tiled);
    LL_INT("io", "threads", c.io.threads);
    LL_INT("io", "jpeg_quality", c.io.jpeg_quality);
#undef LL_REAL
#undef LL_INT
#undef LL_BOOL
#undef LL_STR
    return f;
  }();
  return all;
}

inline const Field& find_field(const std::string& full_key) {
  for (const auto& f : fields())
    if (f.full() == full_key) return f;
  throw ConfigError("unknown config key '" + full_key + "'");
}

}  // namespace config_detail

/// Sets one "section.key" from its textual value (unquoted).
inline void set_config_value(AppConfig& cfg, const std::string& full_key, const std::string& value) {
  config_detail::find_field(full_key).set(cfg, value);
}

inline std::string get_config_value(const AppConfig& cfg, const std::string& full_key) {
  return config_detail::find_field(full_key).get(cfg);
}

inline std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& f : config_detail::fields()) out.push_back(f.full());
  return out;
}

/// Applies the file on top of cfg; keys absent from the file keep their value.
inline void apply_config(AppConfig& cfg, std::istream& in, const std::string& where = "config") {
  using namespace config_detail;
  std::string section;
  std::string line;
  int lineno = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::string at = where + ":" + std::to_string(lineno) + ": ";
    if (t[0] == '[') {
      if (t.back() != ']') throw ConfigError(at + "malformed section header");
      section = trim(t.substr(1, t.size() - 2));
      static const std::set<std::string> known{"apa", "curve", "loss", "train", "eei", "io"};
      if (!known.count(section)) throw ConfigError(at + "unknown config section '" + section + "'");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(at + "expected 'key = value'");
    if (section.empty()) throw ConfigError(at + "key outside of any [section]");
    const std::string full = section + "." + trim(t.substr(0, eq));
    if (!seen.insert(full).second) throw ConfigError(at + "duplicate config key '" + full + "'");
    try {
      set_config_value(cfg, full, unquote(full, trim(t.substr(eq + 1))));
    } catch (const ConfigError& e) {
      throw ConfigError(at + e.what());
    }
  }
}

inline AppConfig parse_config(std::istream& in, const std::string& where = "config") {
  AppConfig cfg;
  apply_config(cfg, in, where);
  return cfg;
}

inline AppConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in, path.string());
}

inline void dump_config(std::ostream& out, const AppConfig& cfg) {
  std::string section;
  for (const auto& f : config_detail::fields()) {
    if (f.section != section) {
      if (!section.empty()) out << '\n';
      section = f.section;
      out << '[' << section << "]\n";
    }
    out << f.key << " = " << f.get(cfg) << '\n';
  }
}

}  // namespace lowlight
