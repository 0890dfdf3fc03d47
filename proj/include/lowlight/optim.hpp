#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "lowlight/image.hpp"

namespace lowlight {

struct TrainConfig {
  int epochs = 100;
  double base_lr = 1e-4;
  int warmup_epochs = 5;
  int decay_every = 50;
  double decay_factor = 0.5;
  double weight_decay = 1e-4;
  int micro_batch = 4;
  int accum_steps = 4;
  double clip_norm = 0.05;
  int patch = 2048;
  unsigned long long seed = 2025;
  int validate_every = 5;

  bool operator==(const TrainConfig&) const = default;

  /// Reduced profile for a single workstation: 256-pixel crops, 20 epochs.
  static TrainConfig desk_scale() {
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.patch = 256;
    return cfg;
  }

  void validate() const {
    if (epochs < 1) throw InvalidInput("train: epochs must be >= 1");
    if (!(base_lr > 0)) throw InvalidInput("train: base_lr must be positive");
    if (warmup_epochs < 0 || warmup_epochs >= epochs) throw InvalidInput("train: need 0 <= warmup_epochs < epochs");
    if (decay_every < 1) throw InvalidInput("train: decay_every must be >= 1");
    if (!(decay_factor > 0)) throw InvalidInput("train: decay_factor must be positive");
    if (weight_decay < 0) throw InvalidInput("train: weight_decay must be >= 0");
    if (micro_batch < 1) throw InvalidInput("train: micro_batch must be >= 1");
    if (accum_steps < 1) throw InvalidInput("train: accum_steps must be >= 1");
    if (!(clip_norm > 0)) throw InvalidInput("train: clip_norm must be positive");
    if (patch < 1) throw InvalidInput("train: patch must be >= 1");
    if (validate_every < 1) throw InvalidInput("train: validate_every must be >= 1");
  }
};

/// Linear warmup over warmup_epochs, then step decay every decay_every epochs.
inline double lr_at(int epoch, const TrainConfig& cfg) {
  if (epoch < cfg.warmup_epochs) return cfg.base_lr * (epoch + 1) / cfg.warmup_epochs;
  const int halvings = (epoch - cfg.warmup_epochs) / cfg.decay_every;
  return cfg.base_lr * std::pow(cfg.decay_factor, halvings);
}

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long long t = 0;
  std::vector<double> m;
  std::vector<double> v;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// Decoupled weight decay (p <- p * (1 - lr * wd)) followed by a bias-corrected Adam update.
template <class T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState& state, double lr, double weight_decay) {
  if (params.size() != grads.size()) throw InvalidInput("adam_step: parameter/gradient size mismatch");
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = static_cast<double>(grads[i]);
    double p = static_cast<double>(params[i]) * (1.0 - lr * weight_decay);
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    p -= lr * mhat / (std::sqrt(vhat) + state.eps);
    params[i] = static_cast<T>(p);
  }
}

template <class T>
double global_norm(std::span<const T> grads) {
  double s = 0.0;
  for (T g : grads) s += static_cast<double>(g) * static_cast<double>(g);
  return std::sqrt(s);
}

/// Rescales in place so the global L2 norm is at most max_norm; returns the norm before clipping.
template <class T>
double clip_gradients(std::span<T> grads, double max_norm) {
  if (!(max_norm > 0)) throw InvalidInput("clip_gradients: max_norm must be positive");
  const double norm = global_norm(std::span<const T>(grads));
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& g : grads) g = static_cast<T>(static_cast<double>(g) * scale);
  }
  return norm;
}

}  // namespace lowlight
