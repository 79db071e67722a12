#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "mixgan/core/error.hpp"
#include "mixgan/nn/mlp.hpp"

namespace mixgan::nn {

struct AdamHyper {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam update for one flat parameter block.
inline void adam_update(std::span<double> params, std::span<const double> grads,
                        std::span<double> m, std::span<double> v,
                        std::uint64_t step_count, const AdamHyper& h) {
  if (params.size() != grads.size() || params.size() != m.size() ||
      params.size() != v.size()) {
    throw DimensionError("adam_update: size mismatch");
  }
  const double t = static_cast<double>(step_count);
  const double bc1 = 1.0 - std::pow(h.beta1, t);
  const double bc2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g;
    v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g * g;
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    params[i] -= h.learning_rate * m_hat / (std::sqrt(v_hat) + h.epsilon);
  }
}

/// First/second moment accumulators for every tensor of one Mlp.
struct AdamState {
  AdamHyper hyper;
  std::uint64_t step_count = 0;
  std::vector<std::vector<double>> m_weights, v_weights;
  std::vector<std::vector<double>> m_bias, v_bias;

  AdamState() = default;
  AdamState(const Mlp& mlp, const AdamHyper& h) : hyper(h) {
    m_weights.reserve(mlp.layers.size());
    for (const auto& l : mlp.layers) {
      m_weights.emplace_back(l.weights.size(), 0.0);
      v_weights.emplace_back(l.weights.size(), 0.0);
      m_bias.emplace_back(l.bias.size(), 0.0);
      v_bias.emplace_back(l.bias.size(), 0.0);
    }
  }

  bool matches(const Mlp& mlp) const {
    if (m_weights.size() != mlp.layers.size()) return false;
    for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
      if (m_weights[i].size() != mlp.layers[i].weights.size()) return false;
      if (m_bias[i].size() != mlp.layers[i].bias.size()) return false;
    }
    return true;
  }
};

/// Apply one Adam step to all parameters of the Mlp.
inline void adam_step(Mlp& mlp, const MlpGradients& grads, AdamState& state) {
  if (!state.matches(mlp)) {
    throw DimensionError("adam_step: state does not match model");
  }
  if (grads.weights.size() != mlp.layers.size()) {
    throw DimensionError("adam_step: gradient/layer count mismatch");
  }
  ++state.step_count;
  for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
    adam_update(mlp.layers[i].weights.values, grads.weights[i].values,
                state.m_weights[i], state.v_weights[i], state.step_count,
                state.hyper);
    adam_update(mlp.layers[i].bias, grads.bias[i], state.m_bias[i],
                state.v_bias[i], state.step_count, state.hyper);
  }
}

}  // namespace mixgan::nn
