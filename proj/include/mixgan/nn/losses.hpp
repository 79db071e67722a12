#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "mixgan/core/error.hpp"
#include "mixgan/core/matrix.hpp"

namespace mixgan::nn {

/// Mean over samples of the squared L2 distance between rows.
/// Note the per-row inner sum is NOT averaged over features.
inline std::pair<double, Matrix2D> mse_loss(const Matrix2D& prediction,
                                            const Matrix2D& target) {
  if (!prediction.same_shape(target)) {
    throw DimensionError("mse_loss: shape mismatch");
  }
  const double inv_n = 1.0 / static_cast<double>(prediction.rows);
  double loss = 0.0;
  Matrix2D grad(prediction.rows, prediction.cols);
  for (std::size_t i = 0; i < prediction.values.size(); ++i) {
    const double d = prediction.values[i] - target.values[i];
    loss += d * d;
    grad.values[i] = 2.0 * d * inv_n;
  }
  return {loss * inv_n, std::move(grad)};
}

inline constexpr double kBceClamp = 1e-7;

/// Mean binary cross-entropy. Probabilities are clamped to
/// [kBceClamp, 1-kBceClamp] before the logs; the gradient is taken at the
/// clamped value.
inline std::pair<double, std::vector<double>> bce_loss(
    std::span<const double> prob, std::span<const double> label) {
  if (prob.size() != label.size()) {
    throw DimensionError("bce_loss: length mismatch");
  }
  const double inv_n = 1.0 / static_cast<double>(prob.size());
  double loss = 0.0;
  std::vector<double> grad(prob.size());
  for (std::size_t i = 0; i < prob.size(); ++i) {
    const double p = std::clamp(prob[i], kBceClamp, 1.0 - kBceClamp);
    const double y = label[i];
    loss += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
    grad[i] = (-y / p + (1.0 - y) / (1.0 - p)) * inv_n;
  }
  return {loss * inv_n, std::move(grad)};
}

/// Numerically stable softmax cross-entropy against hard class indices.
/// grad = (softmax(logits) - one_hot) / batch.
inline std::pair<double, Matrix2D> softmax_ce_loss(
    const Matrix2D& logits, std::span<const int> class_index) {
  if (class_index.size() != logits.rows) {
    throw DimensionError("softmax_ce_loss: label count " +
                         std::to_string(class_index.size()) + " vs rows " +
                         std::to_string(logits.rows));
  }
  const double inv_n = 1.0 / static_cast<double>(logits.rows);
  double loss = 0.0;
  Matrix2D grad(logits.rows, logits.cols);
  for (std::size_t r = 0; r < logits.rows; ++r) {
    const int cls = class_index[r];
    if (cls < 0 || static_cast<std::size_t>(cls) >= logits.cols) {
      throw DimensionError("softmax_ce_loss: label " + std::to_string(cls) +
                           " out of range for " + std::to_string(logits.cols) +
                           " classes (row " + std::to_string(r) + ")");
    }
    auto row = logits.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - mx);
    const double log_sum = std::log(sum) + mx;
    loss += log_sum - row[static_cast<std::size_t>(cls)];
    auto g = grad.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      g[c] = std::exp(row[c] - log_sum) * inv_n;
    }
    g[static_cast<std::size_t>(cls)] -= inv_n;
  }
  return {loss * inv_n, std::move(grad)};
}

/// Soft-target variant: cross-entropy against a full distribution per row.
/// Used when training classifiers on mixed labels.
inline std::pair<double, Matrix2D> softmax_ce_loss(const Matrix2D& logits,
                                                   const Matrix2D& target) {
  if (!logits.same_shape(target)) {
    throw DimensionError("softmax_ce_loss: target shape mismatch");
  }
  const double inv_n = 1.0 / static_cast<double>(logits.rows);
  double loss = 0.0;
  Matrix2D grad(logits.rows, logits.cols);
  for (std::size_t r = 0; r < logits.rows; ++r) {
    auto row = logits.row(r);
    auto t = target.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - mx);
    const double log_sum = std::log(sum) + mx;
    auto g = grad.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      loss += t[c] * (log_sum - row[c]);
      g[c] = (std::exp(row[c] - log_sum) - t[c]) * inv_n;
    }
  }
  return {loss * inv_n, std::move(grad)};
}

}  // namespace mixgan::nn
