#pragma once

// Shared helpers for the unit and acceptance suites: random model builders
// and the analytic-vs-finite-difference gradient comparison used to vet
// every layer/loss combination.

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "mixgan/core/matrix.hpp"
#include "mixgan/core/rng.hpp"
#include "mixgan/nn/finite_diff.hpp"
#include "mixgan/nn/losses.hpp"
#include "mixgan/nn/mlp.hpp"

namespace testing_support {

using mixgan::Matrix2D;
using mixgan::Rng;
namespace nn = mixgan::nn;

inline Matrix2D random_matrix(Rng& rng, std::size_t rows, std::size_t cols,
                              double lo = -1.0, double hi = 1.0) {
  Matrix2D m(rows, cols);
  for (double& v : m.values) v = rng.uniform(lo, hi);
  return m;
}

inline nn::Mlp random_mlp(Rng& rng, const std::vector<std::size_t>& dims,
                          nn::Activation hidden, nn::Activation final_act,
                          double dropout_rate = 0.0,
                          std::set<std::size_t> dropout_positions = {}) {
  nn::Mlp mlp;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const bool last = i + 2 == dims.size();
    mlp.layers.push_back(nn::make_dense_layer(dims[i], dims[i + 1],
                                              last ? final_act : hidden, rng));
  }
  mlp.dropout_rate = dropout_rate;
  mlp.dropout_positions = std::move(dropout_positions);
  mlp.validate();
  return mlp;
}

enum class LossKind { mse, bce, softmax_hard, softmax_soft };

/// Relative error metric for gradient vectors:
/// ||a - f||_2 / max(||a||_2 + ||f||_2, 1e-12).
inline double gradient_rel_error(std::span<const double> analytic,
                                 std::span<const double> numeric) {
  double diff2 = 0.0, na = 0.0, nf = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double d = analytic[i] - numeric[i];
    diff2 += d * d;
    na += analytic[i] * analytic[i];
    nf += numeric[i] * numeric[i];
  }
  return std::sqrt(diff2) / std::max(std::sqrt(na) + std::sqrt(nf), 1e-12);
}

/// Builds the loss for a given network output. Targets are derived
/// deterministically from target_seed so the loss is a pure function of the
/// parameters.
struct LossProbe {
  LossKind kind;
  Matrix2D mse_target;
  std::vector<double> bce_labels;
  std::vector<int> hard_labels;
  Matrix2D soft_targets;

  static LossProbe make(LossKind kind, std::size_t rows, std::size_t out_dim,
                        std::uint64_t target_seed) {
    LossProbe probe;
    probe.kind = kind;
    Rng rng(target_seed);
    switch (kind) {
      case LossKind::mse:
        probe.mse_target = random_matrix(rng, rows, out_dim);
        break;
      case LossKind::bce:
        probe.bce_labels.resize(rows);
        for (double& l : probe.bce_labels) {
          l = rng.uniform() < 0.5 ? 0.0 : 1.0;
        }
        break;
      case LossKind::softmax_hard:
        probe.hard_labels.resize(rows);
        for (int& l : probe.hard_labels) {
          l = static_cast<int>(rng.uniform_int(out_dim));
        }
        break;
      case LossKind::softmax_soft: {
        probe.soft_targets = Matrix2D(rows, out_dim);
        for (std::size_t r = 0; r < rows; ++r) {
          double sum = 0.0;
          auto row = probe.soft_targets.row(r);
          for (double& v : row) {
            v = rng.uniform(0.05, 1.0);
            sum += v;
          }
          for (double& v : row) v /= sum;
        }
        break;
      }
    }
    return probe;
  }

  std::pair<double, Matrix2D> operator()(const Matrix2D& output) const {
    switch (kind) {
      case LossKind::mse:
        return nn::mse_loss(output, mse_target);
      case LossKind::bce: {
        auto [loss, grad_vec] = nn::bce_loss(output.values, bce_labels);
        Matrix2D grad(output.rows, output.cols);
        grad.values = std::move(grad_vec);
        return {loss, std::move(grad)};
      }
      case LossKind::softmax_hard:
        return nn::softmax_ce_loss(output, hard_labels);
      case LossKind::softmax_soft:
        return nn::softmax_ce_loss(output, soft_targets);
    }
    throw std::logic_error("unreachable");
  }
};

/// Analytic parameter gradient vs central finite differences for the loss
/// probe applied to the (eval-mode) forward map. Returns the relative error.
inline double check_param_gradients(const nn::Mlp& mlp, const Matrix2D& batch,
                                    const LossProbe& probe,
                                    double step = 1e-4) {
  Rng no_dropout(0);
  auto [output, cache] = nn::forward(mlp, batch, false, no_dropout);
  auto [loss, grad_out] = probe(output);
  (void)loss;
  const nn::MlpGradients grads = nn::backward(mlp, cache, grad_out);

  std::vector<double> analytic;
  for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
    analytic.insert(analytic.end(), grads.weights[i].values.begin(),
                    grads.weights[i].values.end());
    analytic.insert(analytic.end(), grads.bias[i].begin(),
                    grads.bias[i].end());
  }

  const auto params = nn::param_vector(mlp);
  nn::Mlp scratch = mlp;
  const auto loss_fn = [&](std::span<const double> p) {
    nn::set_param_vector(scratch, p);
    Rng rng(0);
    const Matrix2D out = nn::forward(scratch, batch, false, rng).first;
    return probe(out).first;
  };
  const auto numeric = nn::finite_diff_gradient(loss_fn, params, step);
  return gradient_rel_error(analytic, numeric);
}

/// Central differences are invalid within the step of a ReLU/leaky-ReLU
/// kink, so instances whose pre-activations sit near zero are rejected.
inline bool clear_of_kinks(const nn::Mlp& mlp, const Matrix2D& batch,
                           double margin) {
  Rng rng(0);
  const auto cache = nn::forward(mlp, batch, false, rng).second;
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const auto act = mlp.layers[l].activation;
    if (act != nn::Activation::relu && act != nn::Activation::leaky_relu) {
      continue;
    }
    for (double z : cache.pre_acts[l].values) {
      if (std::abs(z) < margin) return false;
    }
  }
  return true;
}

/// One random instance of a hidden-activation x loss combination.
/// BCE pairs with a single sigmoid output; the softmax losses use a linear
/// final layer; MSE accepts the given final activation.
inline double random_combo_rel_error(nn::Activation hidden, LossKind loss,
                                     std::uint64_t seed,
                                     nn::Activation mse_final
                                     = nn::Activation::linear) {
  for (int attempt = 0;; ++attempt) {
    Rng rng(seed + 7919 * static_cast<std::uint64_t>(attempt));
    const std::size_t in = 2 + rng.uniform_int(6);       // 2..7
    const std::size_t mid = 2 + rng.uniform_int(6);
    const std::size_t out = loss == LossKind::bce ? 1 : 2 + rng.uniform_int(3);
    const std::size_t rows = 1 + rng.uniform_int(5);

    nn::Activation final_act = nn::Activation::linear;
    if (loss == LossKind::bce) final_act = nn::Activation::sigmoid;
    if (loss == LossKind::mse) final_act = mse_final;

    const nn::Mlp mlp =
        random_mlp(rng, {in, mid, mid, out}, hidden, final_act);
    const Matrix2D batch = random_matrix(rng, rows, in);
    if (!clear_of_kinks(mlp, batch, 1e-2) && attempt < 100) continue;

    const LossProbe probe = LossProbe::make(loss, rows, out, seed ^ 0xabcdULL);
    return check_param_gradients(mlp, batch, probe);
  }
}

}  // namespace testing_support
