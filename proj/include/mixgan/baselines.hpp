#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mixgan/core/error.hpp"
#include "mixgan/core/matrix.hpp"
#include "mixgan/core/rng.hpp"
#include "mixgan/data.hpp"
#include "mixgan/nn/adam.hpp"
#include "mixgan/nn/losses.hpp"
#include "mixgan/nn/mlp.hpp"

namespace mixgan {

// ---------------------------------------------------------------------------
// PCA

/// Top-k principal axes of the sample covariance. Rows of `components` are
/// orthonormal; `explained_variance` holds the matching eigenvalues in
/// non-increasing order.
struct PcaModel {
  std::vector<double> mean;   // D
  Matrix2D components;        // k x D
  std::vector<double> explained_variance;  // k

  std::size_t k() const { return components.rows; }
  std::size_t dim() const { return components.cols; }
};

/// Eigendecomposition of the (N-1)-normalized covariance. Sign fixed by
/// making each component's largest-magnitude entry positive.
inline PcaModel pca_fit(const Matrix2D& data, std::size_t k) {
  const std::size_t n = data.rows;
  const std::size_t d = data.cols;
  if (n < 2) {
    throw DataError(DataError::Kind::empty, "pca_fit: need at least 2 rows");
  }
  if (k == 0 || k > std::min(n - 1, d)) {
    throw ConfigError("pca_fit: k must be in [1, min(N-1, D)], got " +
                      std::to_string(k));
  }

  PcaModel model;
  model.mean.assign(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) model.mean[c] += data(r, c);
  }
  for (double& m : model.mean) m /= static_cast<double>(n);

  EigenRowMajor centered(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      centered(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          data(r, c) - model.mean[c];
    }
  }
  const Eigen::MatrixXd cov = (centered.transpose() * centered) /
                              static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("pca_fit: eigendecomposition failed");
  }
  // Eigenvalues come back ascending; take the top k in descending order.
  model.components = Matrix2D(k, d);
  model.explained_variance.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto col = static_cast<Eigen::Index>(d - 1 - i);
    model.explained_variance[i] = solver.eigenvalues()(col);
    Eigen::VectorXd v = solver.eigenvectors().col(col);
    Eigen::Index max_idx = 0;
    v.cwiseAbs().maxCoeff(&max_idx);
    if (v(max_idx) < 0.0) v = -v;
    for (std::size_t c = 0; c < d; ++c) {
      model.components(i, c) = v(static_cast<Eigen::Index>(c));
    }
  }
  return model;
}

inline PcaModel pca_fit(const FeatureDataset& data, std::size_t k) {
  return pca_fit(data.features, k);
}

/// codes = (x - mean) * components^T
inline Matrix2D pca_transform(const PcaModel& model, const Matrix2D& data) {
  if (data.cols != model.dim()) {
    throw DimensionError("pca_transform: dim " + std::to_string(data.cols) +
                         " vs model dim " + std::to_string(model.dim()));
  }
  Matrix2D centered = data;
  for (std::size_t r = 0; r < centered.rows; ++r) {
    for (std::size_t c = 0; c < centered.cols; ++c) {
      centered(r, c) -= model.mean[c];
    }
  }
  return matmul_nt(centered, model.components);
}

/// x_hat = codes * components + mean; with pca_transform this is the
/// orthogonal projection onto the component subspace.
inline Matrix2D pca_inverse(const PcaModel& model, const Matrix2D& codes) {
  if (codes.cols != model.k()) {
    throw DimensionError("pca_inverse: " + std::to_string(codes.cols) +
                         " columns vs k=" + std::to_string(model.k()));
  }
  Matrix2D out = matmul(codes, model.components);
  for (std::size_t r = 0; r < out.rows; ++r) {
    for (std::size_t c = 0; c < out.cols; ++c) out(r, c) += model.mean[c];
  }
  return out;
}

/// Mean squared reconstruction error per sample (squared L2 per row).
inline double pca_reconstruction_error(const PcaModel& model,
                                       const Matrix2D& data) {
  const Matrix2D recon = pca_inverse(model, pca_transform(model, data));
  double err = 0.0;
  for (std::size_t i = 0; i < data.values.size(); ++i) {
    const double d = data.values[i] - recon.values[i];
    err += d * d;
  }
  return err / static_cast<double>(data.rows);
}

// ---------------------------------------------------------------------------
// Plain autoencoder baseline

struct BaselineAeConfig {
  std::size_t hidden1 = 512;
  std::size_t hidden2 = 128;
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  double learning_rate = 1e-4;

  void validate() const {
    if (hidden1 == 0 || hidden2 == 0 || epochs == 0 || batch_size == 0) {
      throw ConfigError("baseline_ae: counts must be positive");
    }
    if (learning_rate <= 0.0) {
      throw ConfigError("baseline_ae: learning_rate must be > 0");
    }
  }
};

/// Symmetric ReLU autoencoder with a linear bottleneck of size k:
/// D -> hidden1 -> hidden2 -> k -> hidden2 -> hidden1 -> D.
struct BaselineAeModel {
  nn::Mlp encoder;
  nn::Mlp decoder;
  std::size_t k = 0;
};

inline BaselineAeModel baseline_ae_train(const FeatureDataset& data,
                                         std::size_t k,
                                         const BaselineAeConfig& config,
                                         Rng& rng) {
  config.validate();
  if (data.size() == 0) {
    throw DataError(DataError::Kind::empty, "baseline_ae_train: empty dataset");
  }
  const std::size_t d = data.dim();

  BaselineAeModel model;
  model.k = k;
  model.encoder.layers = {
      nn::make_dense_layer(d, config.hidden1, nn::Activation::relu, rng),
      nn::make_dense_layer(config.hidden1, config.hidden2, nn::Activation::relu,
                           rng),
      nn::make_dense_layer(config.hidden2, k, nn::Activation::linear, rng)};
  model.decoder.layers = {
      nn::make_dense_layer(k, config.hidden2, nn::Activation::relu, rng),
      nn::make_dense_layer(config.hidden2, config.hidden1, nn::Activation::relu,
                           rng),
      nn::make_dense_layer(config.hidden1, d, nn::Activation::linear, rng)};

  nn::AdamState enc_state(model.encoder, {.learning_rate = config.learning_rate});
  nn::AdamState dec_state(model.decoder, {.learning_rate = config.learning_rate});

  const std::size_t n = data.size();
  const std::size_t steps = (n + config.batch_size - 1) / config.batch_size;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t s = 0; s < steps; ++s) {
      std::vector<std::size_t> idx(config.batch_size);
      for (auto& i : idx) i = rng.uniform_int(n);
      const Matrix2D batch = take_rows(data.features, idx);

      auto [codes, enc_cache] = forward(model.encoder, batch, true, rng);
      auto [recon, dec_cache] = forward(model.decoder, codes, true, rng);
      auto [loss, grad] = nn::mse_loss(recon, batch);
      if (!std::isfinite(loss)) {
        throw NumericalError("baseline_ae_train: non-finite loss at epoch " +
                             std::to_string(epoch));
      }
      auto dec_grads = nn::backward(model.decoder, dec_cache, grad);
      auto enc_grads = nn::backward(model.encoder, enc_cache, dec_grads.input);
      nn::adam_step(model.decoder, dec_grads, dec_state);
      nn::adam_step(model.encoder, enc_grads, enc_state);
    }
  }
  return model;
}

inline Matrix2D baseline_ae_encode(const BaselineAeModel& model,
                                   const Matrix2D& data) {
  Rng rng(0);
  return forward(model.encoder, data, false, rng).first;
}

inline Matrix2D baseline_ae_reconstruct(const BaselineAeModel& model,
                                        const Matrix2D& data) {
  Rng rng(0);
  const Matrix2D codes = forward(model.encoder, data, false, rng).first;
  return forward(model.decoder, codes, false, rng).first;
}

}  // namespace mixgan
