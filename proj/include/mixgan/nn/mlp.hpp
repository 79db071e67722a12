#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "mixgan/core/error.hpp"
#include "mixgan/core/matrix.hpp"
#include "mixgan/core/rng.hpp"

namespace mixgan::nn {

enum class Activation : std::uint8_t {
  leaky_relu = 0,
  relu = 1,
  sigmoid = 2,
  linear = 3,
  softmax = 4
};

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::linear: return "linear";
    case Activation::softmax: return "softmax";
  }
  return "?";
}

inline double sigmoid_scalar(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Fully connected layer: out = act(in * weights + bias).
struct DenseLayer {
  Matrix2D weights;           // in_dim x out_dim
  std::vector<double> bias;   // out_dim
  Activation activation = Activation::linear;
  double leaky_slope = 0.01;

  std::size_t in_dim() const { return weights.rows; }
  std::size_t out_dim() const { return weights.cols; }
};

/// He-uniform weight matrix: entries uniform in +-sqrt(6/in_dim).
inline Matrix2D init_weights(std::size_t in_dim, std::size_t out_dim, Rng& rng) {
  if (in_dim == 0 || out_dim == 0) {
    throw DimensionError("init_weights: dimensions must be positive");
  }
  const double bound = std::sqrt(6.0 / static_cast<double>(in_dim));
  Matrix2D w(in_dim, out_dim);
  for (double& v : w.values) v = rng.uniform(-bound, bound);
  return w;
}

inline DenseLayer make_dense_layer(std::size_t in_dim, std::size_t out_dim,
                                   Activation act, Rng& rng,
                                   double leaky_slope = 0.01) {
  DenseLayer layer;
  layer.weights = init_weights(in_dim, out_dim, rng);
  layer.bias.assign(out_dim, 0.0);
  layer.activation = act;
  layer.leaky_slope = leaky_slope;
  return layer;
}

/// Feed-forward stack with optional inverted dropout between layers.
/// dropout_positions holds the indices of layers whose *input* is dropped;
/// position p masks the activations flowing from layer p-1 into layer p.
struct Mlp {
  std::vector<DenseLayer> layers;
  double dropout_rate = 0.0;
  std::set<std::size_t> dropout_positions;

  std::size_t input_dim() const { return layers.front().in_dim(); }
  std::size_t output_dim() const { return layers.back().out_dim(); }

  void validate() const {
    if (layers.empty()) throw DimensionError("Mlp: no layers");
    for (std::size_t i = 1; i < layers.size(); ++i) {
      if (layers[i].in_dim() != layers[i - 1].out_dim()) {
        throw DimensionError(
            "Mlp: layer " + std::to_string(i) + " expects input dim " +
            std::to_string(layers[i].in_dim()) + " but layer " +
            std::to_string(i - 1) + " outputs " +
            std::to_string(layers[i - 1].out_dim()));
      }
    }
    if (dropout_rate < 0.0 || dropout_rate > 1.0) {
      throw ConfigError("Mlp: dropout_rate outside [0,1]");
    }
  }
};

inline std::size_t param_count(const Mlp& mlp) {
  std::size_t n = 0;
  for (const auto& l : mlp.layers) n += l.weights.size() + l.bias.size();
  return n;
}

/// Everything backward() needs: per-layer inputs (post-dropout),
/// pre-activations, and the dropout masks that were applied.
struct ForwardCache {
  std::vector<Matrix2D> layer_inputs;  // input actually fed to layer l
  std::vector<Matrix2D> pre_acts;      // z_l = input*W + b
  std::vector<Matrix2D> masks;         // empty matrix when no dropout at l
  Matrix2D output;
  bool train_mode = false;
  std::size_t layer_count = 0;
};

namespace detail {

inline void apply_activation(Matrix2D& z, const DenseLayer& layer) {
  switch (layer.activation) {
    case Activation::linear:
      return;
    case Activation::relu:
      for (double& v : z.values) v = v > 0.0 ? v : 0.0;
      return;
    case Activation::leaky_relu: {
      const double s = layer.leaky_slope;
      for (double& v : z.values) v = v >= 0.0 ? v : s * v;
      return;
    }
    case Activation::sigmoid:
      for (double& v : z.values) v = sigmoid_scalar(v);
      return;
    case Activation::softmax:
      for (std::size_t r = 0; r < z.rows; ++r) {
        auto row = z.row(r);
        const double mx = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (double& v : row) {
          v = std::exp(v - mx);
          sum += v;
        }
        for (double& v : row) v /= sum;
      }
      return;
  }
}

/// grad_z = grad_a (*) act'(z), overwriting grad in place.
inline void backprop_activation(Matrix2D& grad, const Matrix2D& pre_act,
                                const DenseLayer& layer) {
  switch (layer.activation) {
    case Activation::linear:
      return;
    case Activation::relu:
      for (std::size_t i = 0; i < grad.values.size(); ++i) {
        if (pre_act.values[i] < 0.0) grad.values[i] = 0.0;
      }
      return;
    case Activation::leaky_relu: {
      const double s = layer.leaky_slope;
      for (std::size_t i = 0; i < grad.values.size(); ++i) {
        if (pre_act.values[i] < 0.0) grad.values[i] *= s;
      }
      return;
    }
    case Activation::sigmoid:
      for (std::size_t i = 0; i < grad.values.size(); ++i) {
        const double a = sigmoid_scalar(pre_act.values[i]);
        grad.values[i] *= a * (1.0 - a);
      }
      return;
    case Activation::softmax: {
      // Row-wise Jacobian product: grad_z = s (*) (grad_a - <grad_a, s>).
      Matrix2D soft = pre_act;
      apply_activation(soft, layer);
      for (std::size_t r = 0; r < grad.rows; ++r) {
        auto g = grad.row(r);
        auto s = soft.row(r);
        double dot = 0.0;
        for (std::size_t c = 0; c < g.size(); ++c) dot += g[c] * s[c];
        for (std::size_t c = 0; c < g.size(); ++c) g[c] = s[c] * (g[c] - dot);
      }
      return;
    }
  }
}

}  // namespace detail

/// Run the network. In train mode, inverted dropout scales kept units by
/// 1/(1-rate) so the expected activation matches eval mode.
inline std::pair<Matrix2D, ForwardCache> forward(const Mlp& mlp,
                                                 const Matrix2D& batch,
                                                 bool train_mode, Rng& rng) {
  if (batch.cols != mlp.input_dim()) {
    throw DimensionError("forward: batch has " + std::to_string(batch.cols) +
                         " columns but layer 0 expects " +
                         std::to_string(mlp.input_dim()));
  }
  ForwardCache cache;
  cache.train_mode = train_mode;
  cache.layer_count = mlp.layers.size();
  cache.layer_inputs.reserve(mlp.layers.size());
  cache.pre_acts.reserve(mlp.layers.size());
  cache.masks.resize(mlp.layers.size());

  Matrix2D current = batch;
  const bool use_dropout = train_mode && mlp.dropout_rate > 0.0;
  const double keep = 1.0 - mlp.dropout_rate;

  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const DenseLayer& layer = mlp.layers[l];
    if (current.cols != layer.in_dim()) {
      throw DimensionError("forward: layer " + std::to_string(l) +
                           " expects input dim " +
                           std::to_string(layer.in_dim()) + ", got " +
                           std::to_string(current.cols));
    }
    if (use_dropout && mlp.dropout_positions.count(l) > 0 && keep > 0.0) {
      Matrix2D mask(current.rows, current.cols);
      for (double& v : mask.values) {
        v = rng.uniform() < keep ? 1.0 / keep : 0.0;
      }
      for (std::size_t i = 0; i < current.values.size(); ++i) {
        current.values[i] *= mask.values[i];
      }
      cache.masks[l] = std::move(mask);
    }
    cache.layer_inputs.push_back(current);

    Matrix2D z = matmul(current, layer.weights);
    add_row_vector(z, layer.bias);
    cache.pre_acts.push_back(z);

    detail::apply_activation(z, layer);
    current = std::move(z);
  }

  cache.output = current;
  return {std::move(current), std::move(cache)};
}

/// Per-parameter gradients plus the gradient with respect to the input batch.
struct MlpGradients {
  std::vector<Matrix2D> weights;
  std::vector<std::vector<double>> bias;
  Matrix2D input;
};

/// Exact reverse pass for the map cached by forward(). When
/// want_param_grads is false only the input gradient is computed
/// (used when a downstream network backpropagates through a frozen one).
inline MlpGradients backward(const Mlp& mlp, const ForwardCache& cache,
                             const Matrix2D& grad_output,
                             bool want_param_grads = true) {
  if (cache.layer_count != mlp.layers.size() ||
      cache.pre_acts.size() != mlp.layers.size()) {
    throw DimensionError("backward: cache does not match this Mlp");
  }
  if (!grad_output.same_shape(cache.output)) {
    throw DimensionError("backward: grad_output shape " +
                         std::to_string(grad_output.rows) + "x" +
                         std::to_string(grad_output.cols) +
                         " does not match forward output");
  }

  MlpGradients grads;
  if (want_param_grads) {
    grads.weights.resize(mlp.layers.size());
    grads.bias.resize(mlp.layers.size());
  }

  Matrix2D grad = grad_output;
  for (std::size_t i = mlp.layers.size(); i-- > 0;) {
    const DenseLayer& layer = mlp.layers[i];
    detail::backprop_activation(grad, cache.pre_acts[i], layer);
    if (want_param_grads) {
      grads.weights[i] = matmul_tn(cache.layer_inputs[i], grad);
      grads.bias[i] = column_sums(grad);
    }
    grad = matmul_nt(grad, layer.weights);
    const Matrix2D& mask = cache.masks[i];
    if (mask.size() > 0) {
      for (std::size_t j = 0; j < grad.values.size(); ++j) {
        grad.values[j] *= mask.values[j];
      }
    }
  }
  grads.input = std::move(grad);
  return grads;
}

/// Flatten all parameters in layer order (weights row-major, then bias).
inline std::vector<double> param_vector(const Mlp& mlp) {
  std::vector<double> out;
  out.reserve(param_count(mlp));
  for (const auto& l : mlp.layers) {
    out.insert(out.end(), l.weights.values.begin(), l.weights.values.end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
  return out;
}

inline void set_param_vector(Mlp& mlp, std::span<const double> params) {
  if (params.size() != param_count(mlp)) {
    throw DimensionError("set_param_vector: length mismatch");
  }
  std::size_t off = 0;
  for (auto& l : mlp.layers) {
    std::copy(params.begin() + off, params.begin() + off + l.weights.size(),
              l.weights.values.begin());
    off += l.weights.size();
    std::copy(params.begin() + off, params.begin() + off + l.bias.size(),
              l.bias.begin());
    off += l.bias.size();
  }
}

}  // namespace mixgan::nn
