#pragma once

// Iterative quadratic curve x <- x + A * x * (1 - x) and the inference paths
// (full frame and Hann-blended tiles) built on it.

#include <algorithm>
#include <vector>

#include "lowlight/curve_net.hpp"
#include "lowlight/image.hpp"
#include "lowlight/patches.hpp"

namespace lowlight {

inline constexpr int kDefaultPatchSize = 256;
inline constexpr int kDefaultPatchOverlap = 64;

namespace curve_detail {

template <class T>
void check_curve_args(const BasicImage<T>& img, const BasicEnhanceMap<T>& map, int n) {
  require_channels(img.channels(), 3, "apply_curve");
  require_same_shape(img, map.values, "apply_curve");
  if (n < 1) throw InvalidInput("apply_curve: iteration count must be >= 1");
}

}  // namespace curve_detail

/// For |A| <= 1 and x in [0,1] every iterate stays in [0,1]; the final clamp
/// only guards against rounding.
template <class T>
BasicImage<T> apply_curve(const BasicImage<T>& img, const BasicEnhanceMap<T>& map, int n) {
  curve_detail::check_curve_args(img, map, n);
  BasicImage<T> out = img;
  auto x = out.storage().data();
  const auto a = map.values.storage().data();
  const std::size_t size = out.size();
  for (int k = 0; k < n; ++k)
    for (std::size_t p = 0; p < size; ++p) x[p] = x[p] + a[p] * x[p] * (T{1} - x[p]);
  out.clamp01();
  return out;
}

/// Curve application that keeps every iterate for the backward pass.
template <class T>
struct CurveTrace {
  std::vector<BasicImage<T>> iterates;  // x_0 .. x_n, unclamped
  const BasicImage<T>& output() const { return iterates.back(); }
};

template <class T>
CurveTrace<T> apply_curve_traced(const BasicImage<T>& img, const BasicEnhanceMap<T>& map, int n) {
  curve_detail::check_curve_args(img, map, n);
  CurveTrace<T> trace;
  trace.iterates.reserve(static_cast<std::size_t>(n) + 1);
  trace.iterates.push_back(img);
  const auto a = map.values.storage().data();
  for (int k = 0; k < n; ++k) {
    BasicImage<T> next = trace.iterates.back();
    auto x = next.storage().data();
    for (std::size_t p = 0; p < next.size(); ++p) x[p] = x[p] + a[p] * x[p] * (T{1} - x[p]);
    trace.iterates.push_back(std::move(next));
  }
  return trace;
}

/// dL/dA given dL/d(output), unrolled exactly through all iterations.
/// Entries whose output left [0,1] (impossible for |A| <= 1) get zero gradient.
template <class T>
BasicImage<T> curve_backward(const CurveTrace<T>& trace, const BasicEnhanceMap<T>& map,
                             const BasicImage<T>& grad_out) {
  const auto& out = trace.output();
  require_same_shape(out, grad_out, "curve_backward");
  const std::size_t size = out.size();
  const auto a = map.values.storage().data();
  std::vector<T> g(grad_out.storage().begin(), grad_out.storage().end());
  for (std::size_t p = 0; p < size; ++p) {
    const T v = out.storage()[p];
    if (v < T{0} || v > T{1}) g[p] = T{0};
  }
  BasicImage<T> grad_a(out.width(), out.height(), out.channels());
  auto ga = grad_a.storage().data();
  const int n = static_cast<int>(trace.iterates.size()) - 1;
  for (int k = n; k >= 1; --k) {
    const auto x = trace.iterates[k - 1].storage().data();
    for (std::size_t p = 0; p < size; ++p) {
      ga[p] += g[p] * x[p] * (T{1} - x[p]);
      g[p] *= T{1} + a[p] * (T{1} - T{2} * x[p]);
    }
  }
  return grad_a;
}

/// Inference path: the curve parameters are predicted from the image itself.
template <class T>
BasicImage<T> enhance(const CurveNet<T>& net, const BasicImage<T>& img, int n) {
  return apply_curve(img, forward(net, img), n);
}

template <class T>
BasicImage<T> enhance(const CurveNet<T>& net, const BasicImage<T>& img) {
  return enhance(net, img, net.iterations());
}

/// Patch-wise enhancement with Hann-weighted stitching. Images smaller than
/// the patch on either side run full frame.
template <class T>
BasicImage<T> enhance_tiled(const CurveNet<T>& net, const BasicImage<T>& img, int patch_size, int overlap, int n) {
  require_channels(img.channels(), 3, "enhance_tiled");
  if (img.width() < patch_size || img.height() < patch_size) return enhance(net, img, n);
  const auto grid = plan_patches(img.width(), img.height(), patch_size, overlap);
  BlendAccumulator acc(img.width(), img.height(), 3, grid.patch_size);
  for (const auto& o : grid.origins) {
    acc.add(o, enhance(net, crop(img, o.x, o.y, grid.patch_size, grid.patch_size), n));
  }
  return acc.template finish<T>();
}

}  // namespace lowlight
