#pragma once

// Adaptive pre-enhancement augmentation: a classical, training-only pipeline
// that turns a raw low-light frame into a moderately enhanced training input.
//
//   bilateral denoise -> YCrCb -> adaptive gamma + CLAHE on Y -> RGB
//   -> Lab a* scaling (red cast) -> HSV saturation boost / highlight suppression

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "lowlight/color.hpp"
#include "lowlight/image.hpp"
#include "lowlight/parallel.hpp"

namespace lowlight {

struct ApaParams {
  // bilateral denoising
  int bilateral_d = 9;
  double sigma_color = 0.3;
  double sigma_space = 3.0;
  // adaptive gamma
  double gamma_base = 2.2;
  double kappa = 0.5;
  double gamma_min = 1.0;
  double gamma_max = 4.0;
  double epsilon = 1e-6;
  // CLAHE on the luminance channel
  bool clahe_enabled = true;
  double clahe_clip = 2.0;  // multiple of the uniform bin height; <= 0 or inf disables clipping
  int clahe_tiles = 8;
  // color and highlight correction
  double beta_red = 1.1;
  double beta_sat = 1.2;
  double eta_supp = 0.95;

  bool operator==(const ApaParams&) const = default;

  /// Throws InvalidInput naming the first violated constraint.
  void validate() const {
    auto fail = [](const std::string& what) { throw InvalidInput("apa parameters: " + what); };
    if (bilateral_d < 1) fail("bilateral_d must be >= 1");
    if (!(sigma_color > 0.0) || !(sigma_space > 0.0)) fail("bilateral sigmas must be positive");
    if (!(gamma_min >= 1.0)) fail("gamma_min must be >= 1");
    if (!(gamma_max > gamma_min)) fail("gamma_max must exceed gamma_min");
    if (!(epsilon > 0.0)) fail("epsilon must be positive");
    if (clahe_tiles < 1) fail("clahe_tiles must be >= 1");
    if (!(beta_red >= 1.0)) fail("beta_red must be >= 1");
    if (!(beta_sat >= 1.0)) fail("beta_sat must be >= 1");
    if (!(eta_supp > 0.0 && eta_supp <= 1.0)) fail("eta_supp must lie in (0, 1]");
  }
};

/// Edge-preserving smoothing over a d x d window. Weights are
/// exp(-r^2 / 2 sigma_space^2) * exp(-|dI|^2 / 2 sigma_color^2), with |dI| the
/// Euclidean distance between pixel colors. Out-of-image taps are skipped and
/// the remaining weights renormalized.
template <class T>
BasicImage<T> bilateral_filter(const BasicImage<T>& img, int d, double sigma_color, double sigma_space) {
  const int w = img.width(), h = img.height(), ch = img.channels();
  const int r = d / 2;
  std::vector<double> spatial(static_cast<std::size_t>(2 * r + 1) * (2 * r + 1));
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      spatial[static_cast<std::size_t>(dy + r) * (2 * r + 1) + dx + r] =
          std::exp(-(dx * dx + dy * dy) / (2.0 * sigma_space * sigma_space));
  const double range_coeff =
      std::isinf(sigma_color) ? 0.0 : -1.0 / (2.0 * sigma_color * sigma_color);

  BasicImage<T> out(w, h, ch);
  parallel_for(0, h, [&](int y) {
    std::vector<double> acc(static_cast<std::size_t>(ch));
    for (int x = 0; x < w; ++x) {
      std::fill(acc.begin(), acc.end(), 0.0);
      double wsum = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= h) continue;
        for (int dx = -r; dx <= r; ++dx) {
          const int xx = x + dx;
          if (xx < 0 || xx >= w) continue;
          double dist2 = 0.0;
          for (int c = 0; c < ch; ++c) {
            const double diff = static_cast<double>(img.at(c, yy, xx)) - static_cast<double>(img.at(c, y, x));
            dist2 += diff * diff;
          }
          const double wt = spatial[static_cast<std::size_t>(dy + r) * (2 * r + 1) + dx + r] *
                            std::exp(range_coeff * dist2);
          wsum += wt;
          for (int c = 0; c < ch; ++c) acc[c] += wt * static_cast<double>(img.at(c, yy, xx));
        }
      }
      for (int c = 0; c < ch; ++c) out.at(c, y, x) = static_cast<T>(std::clamp(acc[c] / wsum, 0.0, 1.0));
    }
  });
  return out;
}

template <class T>
BasicImage<T> bilateral_denoise(const BasicImage<T>& img, const ApaParams& p) {
  require_channels(img.channels(), 3, "bilateral_denoise");
  return bilateral_filter(img, p.bilateral_d, p.sigma_color, p.sigma_space);
}

/// clip(gamma_base - kappa * ln(mean + epsilon), gamma_min, gamma_max)
inline double adaptive_gamma(double mean_luminance, const ApaParams& p) {
  const double raw = p.gamma_base - p.kappa * std::log(mean_luminance + p.epsilon);
  return std::clamp(raw, p.gamma_min, p.gamma_max);
}

namespace apa_detail {

constexpr int kBins = 256;

inline int bin_of(double v) { return std::clamp(static_cast<int>(std::lround(v * (kBins - 1))), 0, kBins - 1); }

// Tile boundaries split [0, n) into `tiles` near-equal spans.
inline std::vector<int> tile_edges(int n, int tiles) {
  std::vector<int> edges(static_cast<std::size_t>(tiles) + 1);
  for (int i = 0; i <= tiles; ++i) edges[i] = static_cast<int>(static_cast<long long>(n) * i / tiles);
  return edges;
}

// Equalization curve for one tile as a 256-entry map into [0,1].
inline std::array<double, kBins> tile_lut(std::array<double, kBins> hist, double area, double clip) {
  if (clip > 0.0 && std::isfinite(clip)) {
    const double limit = std::max(1.0, clip * area / kBins);
    double excess = 0.0;
    for (auto& hv : hist) {
      if (hv > limit) {
        excess += hv - limit;
        hv = limit;
      }
    }
    const double share = excess / kBins;
    for (auto& hv : hist) hv += share;
  }
  std::array<double, kBins> lut{};
  double cdf = 0.0;
  double cdf_min = -1.0;
  for (int i = 0; i < kBins; ++i) {
    cdf += hist[i];
    if (cdf_min < 0.0 && cdf > 0.0) cdf_min = cdf;
    lut[i] = cdf;
  }
  const double denom = area - cdf_min;
  for (int i = 0; i < kBins; ++i) {
    lut[i] = denom > 0.0 ? std::clamp((lut[i] - cdf_min) / denom, 0.0, 1.0) : static_cast<double>(i) / (kBins - 1);
  }
  return lut;
}

// Evaluates a LUT at a continuous level with linear interpolation between bins.
inline double lut_at(const std::array<double, kBins>& lut, double v) {
  const double pos = std::clamp(v, 0.0, 1.0) * (kBins - 1);
  const int i0 = std::min(static_cast<int>(pos), kBins - 2);
  const double f = pos - i0;
  return lut[i0] * (1.0 - f) + lut[i0 + 1] * f;
}

}  // namespace apa_detail

/// Contrast-limited adaptive histogram equalization of a single channel.
/// Per-tile 256-bin histograms are clipped at clip x (tile area / 256), the
/// excess is spread uniformly once, and per-tile maps are blended bilinearly
/// between tile centers.
template <class T>
BasicImage<T> clahe(const BasicImage<T>& channel, double clip, int tiles) {
  using namespace apa_detail;
  require_channels(channel.channels(), 1, "clahe");
  const int w = channel.width(), h = channel.height();
  const int tx = std::clamp(tiles, 1, std::max(1, w));
  const int ty = std::clamp(tiles, 1, std::max(1, h));
  const auto xe = tile_edges(w, tx);
  const auto ye = tile_edges(h, ty);

  std::vector<std::array<double, kBins>> luts(static_cast<std::size_t>(tx) * ty);
  for (int j = 0; j < ty; ++j) {
    for (int i = 0; i < tx; ++i) {
      std::array<double, kBins> hist{};
      for (int y = ye[j]; y < ye[j + 1]; ++y)
        for (int x = xe[i]; x < xe[i + 1]; ++x) hist[bin_of(channel.at(0, y, x))] += 1.0;
      const double area = static_cast<double>(xe[i + 1] - xe[i]) * (ye[j + 1] - ye[j]);
      luts[static_cast<std::size_t>(j) * tx + i] = tile_lut(hist, area, clip);
    }
  }

  auto centers = [](const std::vector<int>& e) {
    std::vector<double> c(e.size() - 1);
    for (std::size_t k = 0; k + 1 < e.size(); ++k) c[k] = 0.5 * (e[k] + e[k + 1] - 1);
    return c;
  };
  const auto cx = centers(xe);
  const auto cy = centers(ye);
  // Index of the left neighbour tile and the interpolation weight toward the right one.
  auto locate = [](const std::vector<double>& c, double p) {
    if (c.size() == 1 || p <= c.front()) return std::pair<int, double>{0, 0.0};
    if (p >= c.back()) return std::pair<int, double>{static_cast<int>(c.size()) - 2, 1.0};
    int k = 0;
    while (p > c[k + 1]) ++k;
    return std::pair<int, double>{k, (p - c[k]) / (c[k + 1] - c[k])};
  };

  BasicImage<T> out(w, h, 1);
  parallel_for(0, h, [&](int y) {
    const auto [j0, fy] = locate(cy, y);
    const int j1 = std::min(j0 + 1, ty - 1);
    for (int x = 0; x < w; ++x) {
      const auto [i0, fx] = locate(cx, x);
      const int i1 = std::min(i0 + 1, tx - 1);
      const double v = channel.at(0, y, x);
      const double v00 = lut_at(luts[static_cast<std::size_t>(j0) * tx + i0], v);
      const double v01 = lut_at(luts[static_cast<std::size_t>(j0) * tx + i1], v);
      const double v10 = lut_at(luts[static_cast<std::size_t>(j1) * tx + i0], v);
      const double v11 = lut_at(luts[static_cast<std::size_t>(j1) * tx + i1], v);
      const double top = v00 * (1.0 - fx) + v01 * fx;
      const double bot = v10 * (1.0 - fx) + v11 * fx;
      out.at(0, y, x) = static_cast<T>(std::clamp(top * (1.0 - fy) + bot * fy, 0.0, 1.0));
    }
  });
  return out;
}

/// Y' = CLAHE(Y^(1/gamma)) with gamma = adaptive_gamma(mean(Y)).
template <class T>
BasicImage<T> boost_luminance(const BasicImage<T>& y_channel, const ApaParams& p, double* gamma_used = nullptr) {
  require_channels(y_channel.channels(), 1, "boost_luminance");
  const double gamma = adaptive_gamma(mean(y_channel), p);
  if (gamma_used) *gamma_used = gamma;
  BasicImage<T> lifted(y_channel.width(), y_channel.height(), 1);
  const double inv = 1.0 / gamma;
  std::transform(y_channel.storage().begin(), y_channel.storage().end(), lifted.storage().begin(), [inv](T v) {
    return static_cast<T>(std::clamp(std::pow(std::clamp(static_cast<double>(v), 0.0, 1.0), inv), 0.0, 1.0));
  });
  if (!p.clahe_enabled) return lifted;
  return clahe(lifted, p.clahe_clip, p.clahe_tiles);
}

/// Scales the Lab a* channel about its neutral midpoint: a' = (a - 0.5) * beta_red + 0.5.
template <class T>
BasicImage<T> red_cast_correct(const BasicImage<T>& img, const ApaParams& p) {
  require_channels(img.channels(), 3, "red_cast_correct");
  auto lab = to_lab(img);
  for (auto& a : lab.plane(1)) {
    a = static_cast<T>(std::clamp((static_cast<double>(a) - 0.5) * p.beta_red + 0.5, 0.0, 1.0));
  }
  return from_lab(lab);
}

/// S' = clip(S * beta_sat), V' = clip(V * eta_supp) in HSV; hue untouched.
template <class T>
BasicImage<T> saturation_highlight_adjust(const BasicImage<T>& img, const ApaParams& p) {
  require_channels(img.channels(), 3, "saturation_highlight_adjust");
  auto hsv = to_hsv(img);
  for (auto& s : hsv.plane(1)) s = static_cast<T>(std::clamp(static_cast<double>(s) * p.beta_sat, 0.0, 1.0));
  for (auto& v : hsv.plane(2)) v = static_cast<T>(std::clamp(static_cast<double>(v) * p.eta_supp, 0.0, 1.0));
  return from_hsv(hsv);
}

template <class T>
BasicImage<T> apa_transform(const BasicImage<T>& img, const ApaParams& p) {
  require_channels(img.channels(), 3, "apa_transform");
  p.validate();
  const auto denoised = bilateral_denoise(img, p);
  auto ycrcb = to_ycrcb(denoised);
  insert_channel(ycrcb, 0, boost_luminance(extract_channel(ycrcb, 0), p));
  const auto merged = from_ycrcb(ycrcb);
  return saturation_highlight_adjust(red_cast_correct(merged, p), p);
}

}  // namespace lowlight
