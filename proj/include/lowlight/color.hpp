#pragma once

// Color-space transforms on 3-channel planar images.
//
// Conventions (every channel stays in [0,1]):
//   YCrCb  BT.601 full range, chroma centered at 0.5.
//   Lab    CIE L*a*b* under D65 from sRGB; L = L*/100, a = 0.5 + a*/255, b = 0.5 + b*/255.
//   HSV    hexcone; H in [0,1) maps to [0,360) degrees.

#include <algorithm>
#include <array>
#include <cmath>

#include "lowlight/image.hpp"

namespace lowlight {

namespace color_detail {

constexpr double kR = 0.299, kG = 0.587, kB = 0.114;
constexpr double kCrScale = 1.402;  // 2 * (1 - kR)
constexpr double kCbScale = 1.772;  // 2 * (1 - kB)

// sRGB primaries to XYZ; row sums give the D65 white point.
constexpr std::array<std::array<double, 3>, 3> kRgbToXyz{{
    {0.412453, 0.357580, 0.180423},
    {0.212671, 0.715160, 0.072169},
    {0.019334, 0.119193, 0.950227},
}};
constexpr double kWhiteX = 0.412453 + 0.357580 + 0.180423;
constexpr double kWhiteZ = 0.019334 + 0.119193 + 0.950227;

constexpr std::array<std::array<double, 3>, 3> invert3(const std::array<std::array<double, 3>, 3>& m) {
  const double a = m[0][0], b = m[0][1], c = m[0][2];
  const double d = m[1][0], e = m[1][1], f = m[1][2];
  const double g = m[2][0], h = m[2][1], i = m[2][2];
  const double det = a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g);
  return {{
      {(e * i - f * h) / det, (c * h - b * i) / det, (b * f - c * e) / det},
      {(f * g - d * i) / det, (a * i - c * g) / det, (c * d - a * f) / det},
      {(d * h - e * g) / det, (b * g - a * h) / det, (a * e - b * d) / det},
  }};
}

constexpr auto kXyzToRgb = invert3(kRgbToXyz);

inline double srgb_to_linear(double v) {
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}
inline double linear_to_srgb(double v) {
  return v <= 0.0031308 ? v * 12.92 : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

constexpr double kLabEps = 216.0 / 24389.0;
constexpr double kLabKappa = 24389.0 / 27.0;

inline double lab_f(double t) { return t > kLabEps ? std::cbrt(t) : (kLabKappa * t + 16.0) / 116.0; }
inline double lab_f_inv(double f) {
  const double f3 = f * f * f;
  return f3 > kLabEps ? f3 : (116.0 * f - 16.0) / kLabKappa;
}

inline double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

template <class T, class Fn>
BasicImage<T> map_pixels(const BasicImage<T>& img, const char* what, Fn fn) {
  require_channels(img.channels(), 3, what);
  BasicImage<T> out(img.width(), img.height(), 3);
  const auto n = img.plane_size();
  auto i0 = img.plane(0), i1 = img.plane(1), i2 = img.plane(2);
  auto o0 = out.plane(0), o1 = out.plane(1), o2 = out.plane(2);
  for (std::size_t p = 0; p < n; ++p) {
    const auto r = fn(static_cast<double>(i0[p]), static_cast<double>(i1[p]), static_cast<double>(i2[p]));
    o0[p] = static_cast<T>(clamp01(r[0]));
    o1[p] = static_cast<T>(clamp01(r[1]));
    o2[p] = static_cast<T>(clamp01(r[2]));
  }
  return out;
}

}  // namespace color_detail

// Per-pixel kernels, exposed for tests and for code that works on single pixels.

inline std::array<double, 3> rgb_to_ycrcb_px(double r, double g, double b) {
  using namespace color_detail;
  const double y = kR * r + kG * g + kB * b;
  return {y, 0.5 + (r - y) / kCrScale, 0.5 + (b - y) / kCbScale};
}

inline std::array<double, 3> ycrcb_to_rgb_px(double y, double cr, double cb) {
  using namespace color_detail;
  const double r = y + kCrScale * (cr - 0.5);
  const double b = y + kCbScale * (cb - 0.5);
  const double g = (y - kR * r - kB * b) / kG;
  return {r, g, b};
}

inline std::array<double, 3> rgb_to_lab_px(double r, double g, double b) {
  using namespace color_detail;
  const double lr = srgb_to_linear(r), lg = srgb_to_linear(g), lb = srgb_to_linear(b);
  const auto& m = kRgbToXyz;
  const double x = (m[0][0] * lr + m[0][1] * lg + m[0][2] * lb) / kWhiteX;
  const double yy = m[1][0] * lr + m[1][1] * lg + m[1][2] * lb;
  const double z = (m[2][0] * lr + m[2][1] * lg + m[2][2] * lb) / kWhiteZ;
  const double fx = lab_f(x), fy = lab_f(yy), fz = lab_f(z);
  const double L = 116.0 * fy - 16.0;
  const double a = 500.0 * (fx - fy);
  const double bb = 200.0 * (fy - fz);
  return {L / 100.0, 0.5 + a / 255.0, 0.5 + bb / 255.0};
}

inline std::array<double, 3> lab_to_rgb_px(double l_enc, double a_enc, double b_enc) {
  using namespace color_detail;
  const double L = l_enc * 100.0, a = (a_enc - 0.5) * 255.0, bb = (b_enc - 0.5) * 255.0;
  const double fy = (L + 16.0) / 116.0;
  const double fx = fy + a / 500.0;
  const double fz = fy - bb / 200.0;
  const double x = lab_f_inv(fx) * kWhiteX;
  const double yy = lab_f_inv(fy);
  const double z = lab_f_inv(fz) * kWhiteZ;
  const auto& m = kXyzToRgb;
  const double lr = m[0][0] * x + m[0][1] * yy + m[0][2] * z;
  const double lg = m[1][0] * x + m[1][1] * yy + m[1][2] * z;
  const double lb = m[2][0] * x + m[2][1] * yy + m[2][2] * z;
  return {linear_to_srgb(clamp01(lr)), linear_to_srgb(clamp01(lg)), linear_to_srgb(clamp01(lb))};
}

inline std::array<double, 3> rgb_to_hsv_px(double r, double g, double b) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  const double v = mx;
  const double s = mx > 0.0 ? delta / mx : 0.0;
  double h = 0.0;
  if (delta > 0.0) {
    if (mx == r) {
      h = (g - b) / delta;
    } else if (mx == g) {
      h = 2.0 + (b - r) / delta;
    } else {
      h = 4.0 + (r - g) / delta;
    }
    h /= 6.0;
    if (h < 0.0) h += 1.0;
    if (h >= 1.0) h -= 1.0;
  }
  return {h, s, v};
}

inline std::array<double, 3> hsv_to_rgb_px(double h, double s, double v) {
  if (s <= 0.0) return {v, v, v};
  double hh = h * 6.0;
  if (hh >= 6.0) hh -= 6.0;
  const int sector = static_cast<int>(std::floor(hh));
  const double f = hh - sector;
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (sector) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

template <class T>
BasicImage<T> to_ycrcb(const BasicImage<T>& img) {
  return color_detail::map_pixels(img, "to_ycrcb", rgb_to_ycrcb_px);
}
template <class T>
BasicImage<T> from_ycrcb(const BasicImage<T>& img) {
  return color_detail::map_pixels(img, "from_ycrcb", ycrcb_to_rgb_px);
}
template <class T>
BasicImage<T> to_lab(const BasicImage<T>& img) {
  return color_detail::map_pixels(img, "to_lab", rgb_to_lab_px);
}
template <class T>
BasicImage<T> from_lab(const BasicImage<T>& img) {
  return color_detail::map_pixels(img, "from_lab", lab_to_rgb_px);
}
template <class T>
BasicImage<T> to_hsv(const BasicImage<T>& img) {
  return color_detail::map_pixels(img, "to_hsv", rgb_to_hsv_px);
}
template <class T>
BasicImage<T> from_hsv(const BasicImage<T>& img) {
  return color_detail::map_pixels(img, "from_hsv", hsv_to_rgb_px);
}

}  // namespace lowlight
