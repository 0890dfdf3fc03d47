#pragma once

// Published measurements of the light curve model on an RTX 3090 at PI = 100.

#include <array>

namespace oracle {

struct EeiTableRow {
  int width, height;
  double time_ms, flops_g, mem_gb;
  double tf, cf, rf;
  std::array<double, 5> eei;  // 8:1:1, 9:0.5:0.5, 6:2:2, 9:0:1, 10:0:0
};

inline constexpr std::array<std::array<double, 3>, 5> kWeightColumns{{
    {8, 1, 1}, {9, 0.5, 0.5}, {6, 2, 2}, {9, 0, 1}, {10, 0, 0},
}};

inline constexpr std::array<EeiTableRow, 6> kEeiTable{{
    {854, 480, 2.07, 0.49, 0.178, 1.033, 0.005, 0.075, {83.45, 93.38, 63.58, 93.73, 103.31}},
    {1280, 720, 4.69, 1.10, 0.359, 1.040, 0.010, 0.152, {84.79, 94.38, 65.62, 95.08, 103.96}},
    {1920, 1080, 10.48, 2.48, 0.719, 1.032, 0.023, 0.304, {85.83, 94.51, 68.45, 95.92, 103.20}},
    {2560, 1440, 18.47, 4.41, 1.264, 1.024, 0.041, 0.534, {87.63, 94.99, 72.91, 97.45, 102.35}},
    {3840, 2160, 41.82, 9.91, 2.756, 1.030, 0.092, 1.164, {94.96, 98.98, 86.92, 104.34, 102.99}},
    {7680, 4320, 167.39, 39.65, 10.779, 1.031, 0.367, 4.554, {131.65, 117.35, 160.25, 138.28, 103.05}},
}};

// Back-solved once from the 4K row.
inline constexpr double kTimeRefS = 0.04060;
inline constexpr double kMemRefBytes = 2.368e9;

}  // namespace oracle
