#pragma once

// Zero-reference objectives with exact analytic gradients.
//
//   l_int  luminance interval: patch means pushed into [e_dark, e_bright],
//          global mean pulled toward e_global
//   l_spa  spatial consistency of 4x4-pooled luminance against the input
//   l_col  color constancy between channel means
//   l_tv   smoothness of the enhancement map
//
// Values are accumulated in double; gradients are returned in the image type.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "lowlight/curve.hpp"
#include "lowlight/curve_net.hpp"
#include "lowlight/image.hpp"

namespace lowlight {

enum class LuminanceMode { ChannelMean, Bt601 };

/// Which image the curve brightens while training: the original frame (the
/// network still sees the augmented one) or the augmented frame itself.
enum class CurveSource { Input, Augmented };

struct LintParams {
  int patch = 16;
  double e_dark = 0.5;
  double e_bright = 0.6;
  double e_global = 0.6;
  double gamma_global = 0.4;

  bool operator==(const LintParams&) const = default;

  void validate() const {
    if (patch < 1) throw InvalidInput("lint: patch must be >= 1");
    if (!(0.0 <= e_dark && e_dark <= e_bright && e_bright <= 1.0)) {
      throw InvalidInput("lint: need 0 <= e_dark <= e_bright <= 1");
    }
    if (!(gamma_global >= 0.0)) throw InvalidInput("lint: gamma_global must be >= 0");
  }
};

struct LossConfig {
  double lambda_tv = 100.0;
  double lambda_spa = 4.0;
  double lambda_col = 20.0;
  double lambda_int = 200.0;
  LintParams lint;
  LuminanceMode luminance = LuminanceMode::ChannelMean;
  CurveSource curve_source = CurveSource::Input;

  bool operator==(const LossConfig&) const = default;

  void validate() const {
    if (lambda_tv < 0 || lambda_spa < 0 || lambda_col < 0 || lambda_int < 0) {
      throw InvalidInput("loss weights must be non-negative");
    }
    lint.validate();
  }
};

struct LossBreakdown {
  double total = 0.0;
  double int_dark = 0.0;
  double int_bright = 0.0;
  double int_global = 0.0;  // unweighted (mean - e_global)^2
  double spa = 0.0;
  double col = 0.0;
  double tv = 0.0;

  double recombine(const LossConfig& cfg) const {
    return cfg.lambda_int * (int_dark + int_bright + cfg.lint.gamma_global * int_global) + cfg.lambda_spa * spa +
           cfg.lambda_tv * tv + cfg.lambda_col * col;
  }
};

template <class T>
struct LossValue {
  double value = 0.0;
  BasicImage<T> grad;
};

template <class T>
struct LintValue {
  double dark = 0.0;
  double bright = 0.0;
  double global = 0.0;
  double value = 0.0;
  BasicImage<T> grad;
};

inline std::array<double, 3> luminance_weights(LuminanceMode mode) {
  if (mode == LuminanceMode::Bt601) return {0.299, 0.587, 0.114};
  return {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
}

template <class T>
BasicImage<T> luminance(const BasicImage<T>& img, LuminanceMode mode = LuminanceMode::ChannelMean) {
  require_channels(img.channels(), 3, "luminance");
  const auto wts = luminance_weights(mode);
  BasicImage<T> y(img.width(), img.height(), 1);
  auto r = img.plane(0), g = img.plane(1), b = img.plane(2);
  auto out = y.plane(0);
  // anchored on green so gray pixels map to themselves exactly
  for (std::size_t p = 0; p < out.size(); ++p) {
    const double gp = g[p];
    out[p] = static_cast<T>(gp + wts[0] * (r[p] - gp) + wts[2] * (b[p] - gp));
  }
  return y;
}

namespace loss_detail {

// Spreads a per-pixel luminance gradient back onto the three channels.
template <class T>
BasicImage<T> luminance_backward(const std::vector<double>& dy, int w, int h, LuminanceMode mode) {
  const auto wts = luminance_weights(mode);
  BasicImage<T> grad(w, h, 3);
  for (int c = 0; c < 3; ++c) {
    auto plane = grad.plane(c);
    for (std::size_t p = 0; p < plane.size(); ++p) plane[p] = static_cast<T>(wts[c] * dy[p]);
  }
  return grad;
}

inline double sgn(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace loss_detail

/// Patches tile the image without overlap; right and bottom remainders form
/// smaller patches that still count as one patch each.
template <class T>
LintValue<T> l_int(const BasicImage<T>& enh, const LintParams& p, LuminanceMode mode = LuminanceMode::ChannelMean) {
  p.validate();
  const int w = enh.width(), h = enh.height();
  const auto y = luminance(enh, mode);
  const auto yp = y.plane(0);
  const int px = (w + p.patch - 1) / p.patch;
  const int py = (h + p.patch - 1) / p.patch;
  const double n_patches = static_cast<double>(px) * py;
  const double n_pixels = static_cast<double>(w) * h;

  // sums are taken relative to one sample so a constant region has an exact mean,
  // and targets are compared at the sample precision
  const double ref = static_cast<double>(yp[0]);
  double global_sum = 0.0;
  for (T v : yp) global_sum += static_cast<double>(v) - ref;
  const double global_mean = ref + global_sum / n_pixels;
  const double e_dark = static_cast<double>(static_cast<T>(p.e_dark));
  const double e_bright = static_cast<double>(static_cast<T>(p.e_bright));
  const double e_global = static_cast<double>(static_cast<T>(p.e_global));

  LintValue<T> out;
  std::vector<double> dy(yp.size(), 0.0);
  for (int j = 0; j < py; ++j) {
    for (int i = 0; i < px; ++i) {
      const int x0 = i * p.patch, y0 = j * p.patch;
      const int x1 = std::min(x0 + p.patch, w), y1 = std::min(y0 + p.patch, h);
      const double anchor = static_cast<double>(yp[static_cast<std::size_t>(y0) * w + x0]);
      double s = 0.0;
      for (int yy = y0; yy < y1; ++yy)
        for (int xx = x0; xx < x1; ++xx) s += static_cast<double>(yp[static_cast<std::size_t>(yy) * w + xx]) - anchor;
      const double count = static_cast<double>(x1 - x0) * (y1 - y0);
      const double m = anchor + s / count;
      const double under = std::max(0.0, e_dark - m);
      const double over = std::max(0.0, m - e_bright);
      out.dark += under * under;
      out.bright += over * over;
      const double dm = (-2.0 * under + 2.0 * over) / n_patches / count;
      if (dm != 0.0) {
        for (int yy = y0; yy < y1; ++yy)
          for (int xx = x0; xx < x1; ++xx) dy[static_cast<std::size_t>(yy) * w + xx] += dm;
      }
    }
  }
  out.dark /= n_patches;
  out.bright /= n_patches;
  out.global = (global_mean - e_global) * (global_mean - e_global);
  out.value = out.dark + out.bright + p.gamma_global * out.global;
  const double dg = p.gamma_global * 2.0 * (global_mean - e_global) / n_pixels;
  for (auto& d : dy) d += dg;
  out.grad = loss_detail::luminance_backward<T>(dy, w, h, mode);
  return out;
}

/// Mean over 4x4-pooled regions and their existing 4-neighbours of
/// (|dE| - |dI|)^2, where dE, dI are neighbour differences of the pooled
/// luminance of the enhanced and reference images. Rows and columns beyond the
/// last full 4x4 block are not pooled.
template <class T>
LossValue<T> l_spa(const BasicImage<T>& enh, const BasicImage<T>& ref, LuminanceMode mode = LuminanceMode::ChannelMean) {
  require_same_shape(enh, ref, "l_spa");
  constexpr int kPool = 4;
  const int w = enh.width(), h = enh.height();
  const int rw = w / kPool, rh = h / kPool;
  LossValue<T> out{0.0, BasicImage<T>(w, h, 3)};
  if (rw * rh < 2) return out;

  auto pool = [&](const BasicImage<T>& img) {
    const auto y = luminance(img, mode);
    std::vector<double> pooled(static_cast<std::size_t>(rw) * rh, 0.0);
    for (int j = 0; j < rh; ++j)
      for (int i = 0; i < rw; ++i) {
        double s = 0.0;
        for (int yy = 0; yy < kPool; ++yy)
          for (int xx = 0; xx < kPool; ++xx) s += static_cast<double>(y.at(0, j * kPool + yy, i * kPool + xx));
        pooled[static_cast<std::size_t>(j) * rw + i] = s / (kPool * kPool);
      }
    return pooled;
  };
  const auto pe = pool(enh);
  const auto pi = pool(ref);

  constexpr std::array<std::array<int, 2>, 4> kNeighbours{{{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};
  std::vector<double> dpe(pe.size(), 0.0);
  double sum = 0.0;
  std::size_t terms = 0;
  for (int j = 0; j < rh; ++j) {
    for (int i = 0; i < rw; ++i) {
      const std::size_t a = static_cast<std::size_t>(j) * rw + i;
      for (const auto& [dx, dy] : kNeighbours) {
        const int ni = i + dx, nj = j + dy;
        if (ni < 0 || ni >= rw || nj < 0 || nj >= rh) continue;
        const std::size_t b = static_cast<std::size_t>(nj) * rw + ni;
        const double de = pe[a] - pe[b];
        const double d = std::abs(de) - std::abs(pi[a] - pi[b]);
        sum += d * d;
        ++terms;
        const double g = 2.0 * d * loss_detail::sgn(de);
        dpe[a] += g;
        dpe[b] -= g;
      }
    }
  }
  out.value = sum / static_cast<double>(terms);
  std::vector<double> dy(static_cast<std::size_t>(w) * h, 0.0);
  for (int j = 0; j < rh; ++j)
    for (int i = 0; i < rw; ++i) {
      const double g = dpe[static_cast<std::size_t>(j) * rw + i] / static_cast<double>(terms) / (kPool * kPool);
      for (int yy = 0; yy < kPool; ++yy)
        for (int xx = 0; xx < kPool; ++xx) dy[static_cast<std::size_t>(j * kPool + yy) * w + i * kPool + xx] = g;
    }
  out.grad = loss_detail::luminance_backward<T>(dy, w, h, mode);
  return out;
}

/// Sum over channel pairs of squared differences of the channel means.
template <class T>
LossValue<T> l_col(const BasicImage<T>& enh) {
  require_channels(enh.channels(), 3, "l_col");
  const double n = static_cast<double>(enh.plane_size());
  std::array<double, 3> m{};
  for (int c = 0; c < 3; ++c) {
    for (T v : enh.plane(c)) m[c] += static_cast<double>(v);
    m[c] /= n;
  }
  LossValue<T> out{0.0, BasicImage<T>(enh.width(), enh.height(), 3)};
  for (int p = 0; p < 3; ++p)
    for (int q = p + 1; q < 3; ++q) out.value += (m[p] - m[q]) * (m[p] - m[q]);
  for (int c = 0; c < 3; ++c) {
    double dm = 0.0;
    for (int q = 0; q < 3; ++q) dm += 2.0 * (m[c] - m[q]);
    const T g = static_cast<T>(dm / n);
    for (auto& v : out.grad.plane(c)) v = g;
  }
  return out;
}

/// Mean over channels of mean squared horizontal plus mean squared vertical
/// forward differences. An axis with no pairs contributes zero.
template <class T>
LossValue<T> l_tv(const BasicEnhanceMap<T>& map) {
  const auto& a = map.values;
  const int w = a.width(), h = a.height(), ch = a.channels();
  LossValue<T> out{0.0, BasicImage<T>(w, h, ch)};
  if (ch == 0) return out;
  const double nh = static_cast<double>(w - 1) * h;
  const double nv = static_cast<double>(w) * (h - 1);
  std::vector<double> g(a.size(), 0.0);
  for (int c = 0; c < ch; ++c) {
    const std::size_t base = static_cast<std::size_t>(c) * a.plane_size();
    double sh = 0.0, sv = 0.0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x + 1 < w; ++x) {
        const double d = static_cast<double>(a.at(c, y, x + 1)) - static_cast<double>(a.at(c, y, x));
        sh += d * d;
        const double gd = 2.0 * d / nh / ch;
        g[base + static_cast<std::size_t>(y) * w + x + 1] += gd;
        g[base + static_cast<std::size_t>(y) * w + x] -= gd;
      }
    for (int y = 0; y + 1 < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double d = static_cast<double>(a.at(c, y + 1, x)) - static_cast<double>(a.at(c, y, x));
        sv += d * d;
        const double gd = 2.0 * d / nv / ch;
        g[base + static_cast<std::size_t>(y + 1) * w + x] += gd;
        g[base + static_cast<std::size_t>(y) * w + x] -= gd;
      }
    out.value += (nh > 0 ? sh / nh : 0.0) + (nv > 0 ? sv / nv : 0.0);
  }
  out.value /= ch;
  for (std::size_t i = 0; i < g.size(); ++i) out.grad.storage()[i] = static_cast<T>(g[i]);
  return out;
}

template <class T>
struct TotalLoss {
  LossBreakdown breakdown;
  std::vector<T> grad;     // dL/dparams, same layout as CurveNet::params()
  BasicImage<T> enhanced;  // I_enh
};

/// Full objective for one training pair. The network always reads img_aug;
/// the curve brightens img_in (or img_aug, per cfg.curve_source); the spatial
/// term compares against img_in. Gradients flow through every curve iteration
/// and every network layer.
template <class T>
TotalLoss<T> total_loss(const BasicImage<T>& img_in, const BasicImage<T>& img_aug, const CurveNet<T>& net,
                        const LossConfig& cfg, int n) {
  cfg.validate();
  require_same_shape(img_in, img_aug, "total_loss");
  ForwardCache<T> cache;
  const auto map = forward(net, img_aug, &cache);
  const auto& base = cfg.curve_source == CurveSource::Input ? img_in : img_aug;
  const auto trace = apply_curve_traced(base, map, n);
  BasicImage<T> enh = trace.output();
  enh.clamp01();

  TotalLoss<T> out;
  out.grad.assign(net.parameter_count(), T{0});
  const std::size_t size = enh.size();
  BasicImage<T> grad_enh(enh.width(), enh.height(), 3);
  auto accumulate = [&](double lambda, const BasicImage<T>& g) {
    if (lambda == 0.0) return;
    for (std::size_t i = 0; i < size; ++i) grad_enh.storage()[i] += static_cast<T>(lambda) * g.storage()[i];
  };

  auto& b = out.breakdown;
  const auto li = l_int(enh, cfg.lint, cfg.luminance);
  b.int_dark = li.dark;
  b.int_bright = li.bright;
  b.int_global = li.global;
  accumulate(cfg.lambda_int, li.grad);
  const auto ls = l_spa(enh, img_in, cfg.luminance);
  b.spa = ls.value;
  accumulate(cfg.lambda_spa, ls.grad);
  const auto lc = l_col(enh);
  b.col = lc.value;
  accumulate(cfg.lambda_col, lc.grad);
  const auto lt = l_tv(map);
  b.tv = lt.value;
  b.total = b.recombine(cfg);

  auto grad_map = curve_backward(trace, map, grad_enh);
  if (cfg.lambda_tv != 0.0) {
    for (std::size_t i = 0; i < grad_map.size(); ++i) {
      grad_map.storage()[i] += static_cast<T>(cfg.lambda_tv) * lt.grad.storage()[i];
    }
  }
  backward(net, img_aug, cache, grad_map, std::span<T>(out.grad));
  out.enhanced = std::move(enh);
  return out;
}

}  // namespace lowlight
