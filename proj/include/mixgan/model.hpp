#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "mixgan/core/error.hpp"
#include "mixgan/core/matrix.hpp"
#include "mixgan/core/rng.hpp"
#include "mixgan/nn/mlp.hpp"

namespace mixgan {

/// Architecture of the mixup GAN. Defaults follow the reference setup:
/// encoder hidden sizes 1000/500 (mirrored in the generator), discriminator
/// 1000/1000, dropout 0.5 between the two hidden layers of encoder and
/// generator, leaky ReLU hidden activations.
struct MixGanConfig {
  std::size_t input_dim = 1582;
  std::size_t latent_dim = 2;
  std::vector<std::size_t> encoder_hidden = {1000, 500};
  std::vector<std::size_t> discriminator_hidden = {1000, 1000};
  double dropout_rate = 0.5;
  double leaky_slope = 0.01;

  void validate() const {
    if (input_dim == 0 || latent_dim == 0) {
      throw ConfigError("model: input_dim and latent_dim must be positive");
    }
    if (encoder_hidden.empty() || discriminator_hidden.empty()) {
      throw ConfigError("model: hidden layer lists must be non-empty");
    }
    for (std::size_t h : encoder_hidden) {
      if (h == 0) throw ConfigError("model: encoder hidden size must be > 0");
    }
    for (std::size_t h : discriminator_hidden) {
      if (h == 0) {
        throw ConfigError("model: discriminator hidden size must be > 0");
      }
    }
    if (dropout_rate < 0.0 || dropout_rate > 1.0) {
      throw ConfigError("model: dropout_rate outside [0,1]");
    }
  }

  bool operator==(const MixGanConfig&) const = default;
};

/// Encoder E, generator/decoder G, discriminator D. G doubles as the
/// autoencoder decoder, so encoder output dim == generator input dim.
struct MixGanModel {
  MixGanConfig config;
  nn::Mlp encoder;        // input -> hidden... -> latent (linear output)
  nn::Mlp generator;      // latent -> reversed hidden... -> input (linear)
  nn::Mlp discriminator;  // input -> hidden... -> 1 (sigmoid output)
};

namespace detail {

inline nn::Mlp build_stack(std::size_t in_dim,
                           const std::vector<std::size_t>& hidden,
                           std::size_t out_dim, nn::Activation out_act,
                           double dropout_rate, bool dropout_between_hidden,
                           double leaky_slope, Rng& rng) {
  nn::Mlp mlp;
  std::size_t prev = in_dim;
  for (std::size_t h : hidden) {
    mlp.layers.push_back(nn::make_dense_layer(prev, h, nn::Activation::leaky_relu,
                                              rng, leaky_slope));
    prev = h;
  }
  mlp.layers.push_back(
      nn::make_dense_layer(prev, out_dim, out_act, rng, leaky_slope));
  if (dropout_between_hidden && hidden.size() >= 2 && dropout_rate > 0.0) {
    mlp.dropout_rate = dropout_rate;
    // One dropout between the first and second hidden feed-forward layers.
    mlp.dropout_positions.insert(1);
  }
  mlp.validate();
  return mlp;
}

}  // namespace detail

inline MixGanModel build_model(const MixGanConfig& config, Rng& rng) {
  config.validate();
  MixGanModel model;
  model.config = config;

  model.encoder = detail::build_stack(
      config.input_dim, config.encoder_hidden, config.latent_dim,
      nn::Activation::linear, config.dropout_rate, true, config.leaky_slope,
      rng);

  std::vector<std::size_t> decoder_hidden(config.encoder_hidden.rbegin(),
                                          config.encoder_hidden.rend());
  model.generator = detail::build_stack(
      config.latent_dim, decoder_hidden, config.input_dim,
      nn::Activation::linear, config.dropout_rate, true, config.leaky_slope,
      rng);

  model.discriminator = detail::build_stack(
      config.input_dim, config.discriminator_hidden, 1, nn::Activation::sigmoid,
      0.0, false, config.leaky_slope, rng);

  return model;
}

/// z = E(x). Deterministic in eval mode.
inline Matrix2D encode(const MixGanModel& model, const Matrix2D& x,
                       bool train_mode, Rng& rng) {
  if (x.cols != model.config.input_dim) {
    throw DimensionError("encode: input dim " + std::to_string(x.cols) +
                         " vs model input_dim " +
                         std::to_string(model.config.input_dim));
  }
  return forward(model.encoder, x, train_mode, rng).first;
}

inline Matrix2D encode(const MixGanModel& model, const Matrix2D& x) {
  Rng rng(0);
  return encode(model, x, false, rng);
}

/// x_hat = G(z).
inline Matrix2D generate(const MixGanModel& model, const Matrix2D& z,
                         bool train_mode, Rng& rng) {
  if (z.cols != model.config.latent_dim) {
    throw DimensionError("generate: latent dim " + std::to_string(z.cols) +
                         " vs model latent_dim " +
                         std::to_string(model.config.latent_dim));
  }
  return forward(model.generator, z, train_mode, rng).first;
}

inline Matrix2D generate(const MixGanModel& model, const Matrix2D& z) {
  Rng rng(0);
  return generate(model, z, false, rng);
}

/// Probability that each row is a real sample; values kept strictly
/// inside (0,1).
inline std::vector<double> discriminate(const MixGanModel& model,
                                        const Matrix2D& x, bool train_mode,
                                        Rng& rng) {
  if (x.cols != model.config.input_dim) {
    throw DimensionError("discriminate: input dim " + std::to_string(x.cols) +
                         " vs model input_dim " +
                         std::to_string(model.config.input_dim));
  }
  const Matrix2D out = forward(model.discriminator, x, train_mode, rng).first;
  std::vector<double> probs(out.rows);
  constexpr double eps = 1e-12;
  for (std::size_t r = 0; r < out.rows; ++r) {
    probs[r] = std::clamp(out(r, 0), eps, 1.0 - eps);
  }
  return probs;
}

inline std::vector<double> discriminate(const MixGanModel& model,
                                        const Matrix2D& x) {
  Rng rng(0);
  return discriminate(model, x, false, rng);
}

inline std::size_t param_count(const MixGanModel& model) {
  return nn::param_count(model.encoder) + nn::param_count(model.generator) +
         nn::param_count(model.discriminator);
}

}  // namespace mixgan
