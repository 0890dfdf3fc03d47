#pragma once

// Overlapping patch grids and Hann-weighted stitching for tiled inference.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lowlight/image.hpp"

namespace lowlight {

struct PatchOrigin {
  int x = 0;
  int y = 0;
  friend bool operator==(const PatchOrigin&, const PatchOrigin&) = default;
};

struct PatchGrid {
  int width = 0;
  int height = 0;
  int patch_size = 0;
  int overlap = 0;
  std::vector<PatchOrigin> origins;
};

/// Border weight floor; a pure Hann window is zero on the patch border.
inline constexpr double kHannFloor = 1e-3;

/// Origins along one axis: stride patch - overlap, last origin clamped to length - patch.
inline std::vector<int> axis_origins(int length, int patch, int overlap) {
  const int stride = patch - overlap;
  std::vector<int> out;
  int o = 0;
  while (o + patch < length) {
    out.push_back(o);
    o += stride;
  }
  out.push_back(length - patch);
  return out;
}

/// When either side is shorter than patch_size the grid degenerates to
/// square patches of the shorter side (a single patch for square images).
inline PatchGrid plan_patches(int width, int height, int patch_size, int overlap) {
  if (width <= 0 || height <= 0) throw InvalidInput("plan_patches: empty image");
  if (patch_size <= 0) throw InvalidInput("plan_patches: patch_size must be positive");
  if (overlap < 0 || overlap >= patch_size) throw InvalidInput("plan_patches: need 0 <= overlap < patch_size");

  PatchGrid grid;
  grid.width = width;
  grid.height = height;
  grid.patch_size = std::min({patch_size, width, height});
  grid.overlap = std::min(overlap, grid.patch_size - 1);
  const auto xs = axis_origins(width, grid.patch_size, grid.overlap);
  const auto ys = axis_origins(height, grid.patch_size, grid.overlap);
  grid.origins.reserve(xs.size() * ys.size());
  for (int y : ys)
    for (int x : xs) grid.origins.push_back({x, y});
  return grid;
}

/// Symmetric 1-D Hann window of length n.
inline std::vector<double> hann_window(int n) {
  std::vector<double> w(static_cast<std::size_t>(n), 1.0);
  if (n <= 1) return w;
  for (int i = 0; i < n; ++i) w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / (n - 1)));
  return w;
}

/// Separable 2-D Hann weights (row-major, size x size), floored at kHannFloor.
inline std::vector<double> hann_weights_2d(int size) {
  const auto w = hann_window(size);
  std::vector<double> out(static_cast<std::size_t>(size) * size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) out[static_cast<std::size_t>(y) * size + x] = std::max(w[y] * w[x], kHannFloor);
  return out;
}

/// Streaming weighted-average stitcher. Patches are accumulated in the order
/// they are added, in double precision, so results are reproducible.
class BlendAccumulator {
 public:
  BlendAccumulator(int width, int height, int channels, int patch_size)
      : width_(width),
        height_(height),
        channels_(channels),
        patch_size_(patch_size),
        weights_(hann_weights_2d(patch_size)),
        num_(static_cast<std::size_t>(width) * height * channels, 0.0),
        den_(static_cast<std::size_t>(width) * height, 0.0) {}

  template <class T>
  void add(PatchOrigin origin, const BasicImage<T>& patch) {
    if (patch.width() != patch_size_ || patch.height() != patch_size_ || patch.channels() != channels_) {
      throw InvalidInput("blend: patch shape does not match the grid");
    }
    if (origin.x < 0 || origin.y < 0 || origin.x + patch_size_ > width_ || origin.y + patch_size_ > height_) {
      throw InvalidInput("blend: patch lies outside the image");
    }
    const std::size_t plane = static_cast<std::size_t>(width_) * height_;
    for (int y = 0; y < patch_size_; ++y) {
      for (int x = 0; x < patch_size_; ++x) {
        const double w = weights_[static_cast<std::size_t>(y) * patch_size_ + x];
        const std::size_t p = static_cast<std::size_t>(origin.y + y) * width_ + origin.x + x;
        den_[p] += w;
        for (int c = 0; c < channels_; ++c) num_[c * plane + p] += w * static_cast<double>(patch.at(c, y, x));
      }
    }
  }

  template <class T = float>
  BasicImage<T> finish() const {
    BasicImage<T> out(width_, height_, channels_);
    const std::size_t plane = static_cast<std::size_t>(width_) * height_;
    for (std::size_t p = 0; p < plane; ++p) {
      if (!(den_[p] > 0.0)) throw std::logic_error("blend: pixel not covered by any patch");
      for (int c = 0; c < channels_; ++c) {
        out.storage()[c * plane + p] = static_cast<T>(std::clamp(num_[c * plane + p] / den_[p], 0.0, 1.0));
      }
    }
    return out;
  }

 private:
  int width_, height_, channels_, patch_size_;
  std::vector<double> weights_;
  std::vector<double> num_;
  std::vector<double> den_;
};

template <class T>
BasicImage<T> blend_patches(const std::vector<std::pair<PatchOrigin, BasicImage<T>>>& patches, int width,
                            int height) {
  if (patches.empty()) throw InvalidInput("blend_patches: no patches");
  const auto& first = patches.front().second;
  BlendAccumulator acc(width, height, first.channels(), first.width());
  for (const auto& [origin, patch] : patches) acc.add(origin, patch);
  return acc.template finish<T>();
}

}  // namespace lowlight
