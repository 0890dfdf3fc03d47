#pragma once

// Lightweight curve-estimation network.
//
// Seven depthwise-separable 3x3 layers at constant resolution (no down- or
// up-sampling), width c (default 8), ReLU on hidden layers and tanh on the
// 3-channel output. The last three layers read symmetric skip concatenations:
//
//   x1 = f(img)  x2 = f(x1)  x3 = f(x2)  x4 = f(x3)
//   x5 = f([x3, x4])  x6 = f([x2, x5])  A = tanh(g([x1, x6]))
//
// Each layer owns depthwise weights (cin x 9) and biases (cin), followed by
// pointwise weights (cout x cin) and biases (cout). All parameters live in one
// flat vector so optimizers and serializers can treat them uniformly.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "lowlight/image.hpp"
#include "lowlight/parallel.hpp"

namespace lowlight {

inline constexpr int kCurveLayers = 7;
inline constexpr int kDefaultCurveWidth = 8;
inline constexpr int kDefaultCurveIterations = 8;

struct LayerShape {
  int cin = 0;
  int cout = 0;
  std::size_t dw_weight = 0;  // offsets into the flat parameter vector
  std::size_t dw_bias = 0;
  std::size_t pw_weight = 0;
  std::size_t pw_bias = 0;
  std::size_t end = 0;
};

/// Layer shapes and parameter offsets for a given width.
inline std::array<LayerShape, kCurveLayers> curve_topology(int width) {
  const std::array<std::pair<int, int>, kCurveLayers> io{{
      {3, width}, {width, width}, {width, width}, {width, width},
      {2 * width, width}, {2 * width, width}, {2 * width, 3},
  }};
  std::array<LayerShape, kCurveLayers> layers{};
  std::size_t off = 0;
  for (int l = 0; l < kCurveLayers; ++l) {
    auto& s = layers[l];
    s.cin = io[l].first;
    s.cout = io[l].second;
    s.dw_weight = off;
    s.dw_bias = s.dw_weight + static_cast<std::size_t>(s.cin) * 9;
    s.pw_weight = s.dw_bias + s.cin;
    s.pw_bias = s.pw_weight + static_cast<std::size_t>(s.cout) * s.cin;
    s.end = s.pw_bias + s.cout;
    off = s.end;
  }
  return layers;
}

inline std::size_t curve_parameter_count(int width) { return curve_topology(width).back().end; }

/// Multiply-accumulates per pixel for one forward pass (depthwise + pointwise).
inline std::size_t curve_macs_per_pixel(int width) {
  std::size_t macs = 0;
  for (const auto& s : curve_topology(width)) macs += static_cast<std::size_t>(s.cin) * 9 + s.cin * s.cout;
  return macs;
}

template <class T>
struct BasicEnhanceMap {
  BasicImage<T> values;  // 3 channels in (-1, 1)
};
using EnhanceMap = BasicEnhanceMap<float>;

template <class T>
class CurveNet {
 public:
  explicit CurveNet(int width = kDefaultCurveWidth, int iterations = kDefaultCurveIterations)
      : width_(width), iterations_(iterations), layers_(curve_topology(width)),
        params_(curve_parameter_count(width), T{0}) {
    if (width < 1) throw InvalidInput("curve net width must be >= 1");
    if (iterations < 1) throw InvalidInput("curve iteration count must be >= 1");
  }

  int width() const { return width_; }
  int iterations() const { return iterations_; }
  const std::array<LayerShape, kCurveLayers>& layers() const { return layers_; }
  std::span<T> params() { return params_; }
  std::span<const T> params() const { return params_; }
  std::size_t parameter_count() const { return params_.size(); }

  /// Zero-mean Gaussian weights (sigma 0.02), zero biases; reproducible per seed.
  void init_gaussian(std::uint64_t seed, double sigma = 0.02) {
    std::mt19937_64 rng(seed);
    auto uniform = [&rng] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
    std::fill(params_.begin(), params_.end(), T{0});
    for (const auto& s : layers_) {
      auto fill = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
          const double u1 = uniform(), u2 = uniform();
          params_[i] = static_cast<T>(sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2));
        }
      };
      fill(s.dw_weight, s.dw_bias);
      fill(s.pw_weight, s.pw_bias);
    }
  }

  template <class U>
  CurveNet<U> cast() const {
    CurveNet<U> out(width_, iterations_);
    for (std::size_t i = 0; i < params_.size(); ++i) out.params()[i] = static_cast<U>(params_[i]);
    return out;
  }

 private:
  int width_;
  int iterations_;
  std::array<LayerShape, kCurveLayers> layers_;
  std::vector<T> params_;
};

/// Intermediate activations kept for the backward pass.
template <class T>
struct ForwardCache {
  int width = 0;
  int height = 0;
  std::array<std::vector<T>, kCurveLayers> dw_out;  // depthwise outputs (cin planes)
  std::array<std::vector<T>, kCurveLayers> act;     // layer outputs after activation (cout planes)
};

namespace curve_detail {

// Index of the layer outputs concatenated as each layer's input; -1 is the image.
inline constexpr std::array<std::array<int, 2>, kCurveLayers> kSources{{
    {-1, -2}, {0, -2}, {1, -2}, {2, -2}, {2, 3}, {1, 4}, {0, 5},
}};

// 3x3 cross-correlation with zero padding, stride 1.
template <class T>
void depthwise3x3(const T* in, T* out, int w, int h, const T* k, T bias) {
  parallel_for(0, h, [&](int y) {
    T* row = out + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) row[x] = bias;
    for (int ky = 0; ky < 3; ++ky) {
      const int yy = y + ky - 1;
      if (yy < 0 || yy >= h) continue;
      const T* src = in + static_cast<std::size_t>(yy) * w;
      const T k0 = k[ky * 3], k1 = k[ky * 3 + 1], k2 = k[ky * 3 + 2];
      if (w == 1) {
        row[0] += k1 * src[0];
        continue;
      }
      row[0] += k1 * src[0] + k2 * src[1];
      for (int x = 1; x < w - 1; ++x) row[x] += k0 * src[x - 1] + k1 * src[x] + k2 * src[x + 1];
      row[w - 1] += k0 * src[w - 2] + k1 * src[w - 1];
    }
  }, std::max(1, 16384 / w));
}

template <class T>
std::vector<const T*> layer_inputs(int layer, const T* image, const ForwardCache<T>& cache, std::size_t plane) {
  std::vector<const T*> in;
  for (int src : kSources[layer]) {
    if (src == -2) continue;
    if (src == -1) {
      for (int c = 0; c < 3; ++c) in.push_back(image + c * plane);
    } else {
      const int n = static_cast<int>(cache.act[src].size() / plane);
      for (int c = 0; c < n; ++c) in.push_back(cache.act[src].data() + c * plane);
    }
  }
  return in;
}

}  // namespace curve_detail

/// Runs the network; A has the input's spatial shape and 3 channels in (-1, 1).
template <class T>
BasicEnhanceMap<T> forward(const CurveNet<T>& net, const BasicImage<T>& img, ForwardCache<T>* cache_out = nullptr) {
  using namespace curve_detail;
  require_channels(img.channels(), 3, "curve forward");
  if (img.width() < 1 || img.height() < 1) throw InvalidInput("curve forward: empty image");
  const int w = img.width(), h = img.height();
  const std::size_t plane = img.plane_size();
  ForwardCache<T> local;
  ForwardCache<T>& cache = cache_out ? *cache_out : local;
  cache.width = w;
  cache.height = h;
  const auto params = net.params();

  for (int l = 0; l < kCurveLayers; ++l) {
    const auto& s = net.layers()[l];
    const auto inputs = layer_inputs(l, img.data().data(), cache, plane);
    auto& dw = cache.dw_out[l];
    dw.assign(static_cast<std::size_t>(s.cin) * plane, T{0});
    for (int i = 0; i < s.cin; ++i) {
      depthwise3x3(inputs[i], dw.data() + i * plane, w, h, &params[s.dw_weight + 9 * i], params[s.dw_bias + i]);
    }
    auto& act = cache.act[l];
    act.assign(static_cast<std::size_t>(s.cout) * plane, T{0});
    const bool last = l == kCurveLayers - 1;
    parallel_for(0, s.cout, [&](int o) {
      T* out = act.data() + o * plane;
      std::fill(out, out + plane, params[s.pw_bias + o]);
      for (int i = 0; i < s.cin; ++i) {
        const T wgt = params[s.pw_weight + static_cast<std::size_t>(o) * s.cin + i];
        const T* src = dw.data() + i * plane;
        for (std::size_t p = 0; p < plane; ++p) out[p] += wgt * src[p];
      }
      if (last) {
        // tanh rounds to exactly +-1 in float for large inputs; keep |A| < 1
        const T lim = std::nextafter(T{1}, T{0});
        for (std::size_t p = 0; p < plane; ++p) out[p] = std::clamp(std::tanh(out[p]), -lim, lim);
      } else {
        for (std::size_t p = 0; p < plane; ++p) out[p] = out[p] > T{0} ? out[p] : T{0};
      }
    }, plane >= 16384 ? 1 : s.cout);
  }

  BasicEnhanceMap<T> map{BasicImage<T>(w, h, 3)};
  std::copy(cache.act.back().begin(), cache.act.back().end(), map.values.storage().begin());
  return map;
}

/// Accumulates dL/dparams into grad given dL/dA and the cache from forward().
template <class T>
void backward(const CurveNet<T>& net, const BasicImage<T>& img, const ForwardCache<T>& cache,
              const BasicImage<T>& grad_map, std::span<T> grad) {
  using namespace curve_detail;
  if (grad.size() != net.parameter_count()) throw InvalidInput("backward: gradient buffer size mismatch");
  const int w = cache.width, h = cache.height;
  const std::size_t plane = static_cast<std::size_t>(w) * h;
  if (grad_map.width() != w || grad_map.height() != h || grad_map.channels() != 3) {
    throw InvalidInput("backward: gradient map shape mismatch");
  }
  const auto params = net.params();
  std::array<std::vector<T>, kCurveLayers> d_act;
  for (int l = 0; l < kCurveLayers; ++l) d_act[l].assign(cache.act[l].size(), T{0});
  std::copy(grad_map.storage().begin(), grad_map.storage().end(), d_act.back().begin());

  std::vector<T> d_pre, d_dw;
  for (int l = kCurveLayers - 1; l >= 0; --l) {
    const auto& s = net.layers()[l];
    const auto& act = cache.act[l];
    const auto& dw = cache.dw_out[l];
    const bool last = l == kCurveLayers - 1;

    d_pre.resize(act.size());
    for (std::size_t p = 0; p < act.size(); ++p) {
      d_pre[p] = last ? d_act[l][p] * (T{1} - act[p] * act[p]) : (act[p] > T{0} ? d_act[l][p] : T{0});
    }

    // pointwise
    d_dw.assign(static_cast<std::size_t>(s.cin) * plane, T{0});
    for (int o = 0; o < s.cout; ++o) {
      const T* g = d_pre.data() + o * plane;
      double bsum = 0.0;
      for (std::size_t p = 0; p < plane; ++p) bsum += static_cast<double>(g[p]);
      grad[s.pw_bias + o] += static_cast<T>(bsum);
      for (int i = 0; i < s.cin; ++i) {
        const T* src = dw.data() + i * plane;
        double wsum = 0.0;
        for (std::size_t p = 0; p < plane; ++p) wsum += static_cast<double>(g[p]) * static_cast<double>(src[p]);
        const std::size_t wi = s.pw_weight + static_cast<std::size_t>(o) * s.cin + i;
        grad[wi] += static_cast<T>(wsum);
        const T wgt = params[wi];
        T* dst = d_dw.data() + i * plane;
        for (std::size_t p = 0; p < plane; ++p) dst[p] += wgt * g[p];
      }
    }

    // depthwise; inputs are scattered back into the source layers' gradients
    const auto inputs = layer_inputs(l, img.data().data(), cache, plane);
    std::vector<T*> d_inputs;
    for (int src : kSources[l]) {
      if (src == -2) continue;
      if (src == -1) {
        for (int c = 0; c < 3; ++c) d_inputs.push_back(nullptr);
      } else {
        const int n = static_cast<int>(d_act[src].size() / plane);
        for (int c = 0; c < n; ++c) d_inputs.push_back(d_act[src].data() + c * plane);
      }
    }
    for (int i = 0; i < s.cin; ++i) {
      const T* g = d_dw.data() + i * plane;
      const T* in = inputs[i];
      T* din = d_inputs[i];
      const T* k = &params[s.dw_weight + 9 * i];
      double bsum = 0.0;
      std::array<double, 9> ksum{};
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const T gv = g[static_cast<std::size_t>(y) * w + x];
          bsum += static_cast<double>(gv);
          for (int ky = 0; ky < 3; ++ky) {
            const int yy = y + ky - 1;
            if (yy < 0 || yy >= h) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int xx = x + kx - 1;
              if (xx < 0 || xx >= w) continue;
              const std::size_t q = static_cast<std::size_t>(yy) * w + xx;
              ksum[ky * 3 + kx] += static_cast<double>(gv) * static_cast<double>(in[q]);
              if (din) din[q] += k[ky * 3 + kx] * gv;
            }
          }
        }
      }
      grad[s.dw_bias + i] += static_cast<T>(bsum);
      for (int t = 0; t < 9; ++t) grad[s.dw_weight + 9 * i + t] += static_cast<T>(ksum[t]);
    }
  }
}

}  // namespace lowlight
