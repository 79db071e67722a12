#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mixgan/core/error.hpp"
#include "mixgan/core/matrix.hpp"
#include "mixgan/core/rng.hpp"
#include "mixgan/data.hpp"

namespace mixgan {

struct MixupConfig {
  double alpha = 1.0;          // Beta(alpha, alpha) shape
  double real_fraction = 0.5;  // fraction of rows forced to lambda in {0,1}
  std::uint64_t seed = 0;

  void validate() const {
    if (alpha <= 0.0) throw ConfigError("mixup: alpha must be > 0");
    if (real_fraction < 0.0 || real_fraction > 1.0) {
      throw ConfigError("mixup: real_fraction must be in [0,1]");
    }
  }
};

/// A batch of virtual training examples. Rows with lambda exactly 0 or 1
/// are flagged is_real and reproduce an original sample bit-exactly.
struct MixedBatch {
  Matrix2D x_tilde;
  Matrix2D y_tilde;
  std::vector<double> lambda;
  std::vector<bool> is_real;
  std::vector<std::pair<std::size_t, std::size_t>> source_indices;

  std::size_t size() const { return x_tilde.rows; }
  std::size_t real_count() const {
    std::size_t n = 0;
    for (bool r : is_real) n += r ? 1 : 0;
    return n;
  }
};

/// x_tilde = lambda*x_i + (1-lambda)*x_j, same for labels. Endpoints are
/// returned as exact copies so that lambda in {0,1} is bit-faithful.
inline std::pair<std::vector<double>, std::vector<double>> mix_pair(
    std::span<const double> x_i, std::span<const double> y_i,
    std::span<const double> x_j, std::span<const double> y_j, double lambda) {
  if (x_i.size() != x_j.size()) {
    throw DimensionError("mix_pair: feature dims differ");
  }
  if (y_i.size() != y_j.size()) {
    throw DimensionError("mix_pair: label dims differ");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ConfigError("mix_pair: lambda outside [0,1]");
  }
  if (lambda == 1.0) {
    return {{x_i.begin(), x_i.end()}, {y_i.begin(), y_i.end()}};
  }
  if (lambda == 0.0) {
    return {{x_j.begin(), x_j.end()}, {y_j.begin(), y_j.end()}};
  }
  std::vector<double> x(x_i.size());
  std::vector<double> y(y_i.size());
  const double one_minus = 1.0 - lambda;
  for (std::size_t k = 0; k < x.size(); ++k) {
    x[k] = lambda * x_i[k] + one_minus * x_j[k];
  }
  for (std::size_t k = 0; k < y.size(); ++k) {
    y[k] = lambda * y_i[k] + one_minus * y_j[k];
  }
  return {std::move(x), std::move(y)};
}

/// With probability real_fraction returns exactly 0.0 or 1.0 (equal odds);
/// otherwise a Beta(alpha, alpha) draw from the open interval.
inline double sample_lambda(const MixupConfig& config, Rng& rng) {
  if (config.real_fraction > 0.0 && rng.uniform() < config.real_fraction) {
    return rng.uniform() < 0.5 ? 1.0 : 0.0;
  }
  return rng.beta(config.alpha, config.alpha);
}

/// Builds batch_size virtual examples from uniformly drawn sample pairs.
inline MixedBatch make_mixed_batch(const FeatureDataset& dataset,
                                   std::size_t batch_size,
                                   const MixupConfig& config, Rng& rng) {
  config.validate();
  if (dataset.size() == 0) {
    throw DataError(DataError::Kind::empty, "make_mixed_batch: empty dataset");
  }
  const std::size_t n = dataset.size();
  MixedBatch batch;
  batch.x_tilde = Matrix2D(batch_size, dataset.dim());
  batch.y_tilde = Matrix2D(batch_size, kNumClasses);
  batch.lambda.resize(batch_size);
  batch.is_real.resize(batch_size);
  batch.source_indices.resize(batch_size);

  for (std::size_t r = 0; r < batch_size; ++r) {
    const std::size_t i = rng.uniform_int(n);
    const std::size_t j = rng.uniform_int(n);
    const double lambda = sample_lambda(config, rng);
    auto [x, y] = mix_pair(dataset.features.row(i), dataset.one_hot.row(i),
                           dataset.features.row(j), dataset.one_hot.row(j),
                           lambda);
    std::copy(x.begin(), x.end(), batch.x_tilde.row(r).begin());
    std::copy(y.begin(), y.end(), batch.y_tilde.row(r).begin());
    batch.lambda[r] = lambda;
    batch.is_real[r] = lambda == 0.0 || lambda == 1.0;
    batch.source_indices[r] = {i, j};
  }
  return batch;
}

}  // namespace mixgan
