#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "mixgan/core/error.hpp"
#include "mixgan/core/matrix.hpp"
#include "mixgan/core/rng.hpp"
#include "mixgan/data.hpp"
#include "mixgan/mixup.hpp"
#include "mixgan/model.hpp"
#include "mixgan/nn/adam.hpp"
#include "mixgan/nn/losses.hpp"
#include "mixgan/nn/mlp.hpp"

namespace mixgan {

struct TrainConfig {
  std::size_t pretrain_epochs = 50;
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  double lr_autoencoder = 1e-4;
  double lr_generator = 1e-4;
  double lr_discriminator = 1e-4;
  // Reserved: reconstruction and adversarial objectives run as separate
  // phases, so no relative weighting is applied.
  double recon_weight = 1.0;
  MixupConfig mixup;
  std::uint64_t seed = 1;

  void validate() const {
    if (epochs == 0 && pretrain_epochs == 0) {
      throw ConfigError("train: nothing to do, all epoch counts are 0");
    }
    if (batch_size == 0) throw ConfigError("train: batch_size must be > 0");
    if (lr_autoencoder <= 0.0 || lr_generator <= 0.0 ||
        lr_discriminator <= 0.0) {
      throw ConfigError("train: learning rates must be > 0");
    }
    mixup.validate();
  }
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::string phase;  // "pretrain" or "adversarial"
  double recon_loss = 0.0;
  double gen_loss = 0.0;
  double disc_loss = 0.0;
  double disc_accuracy = 0.0;
  std::size_t disc_skipped_batches = 0;
  double heldout_disc_accuracy =
      std::numeric_limits<double>::quiet_NaN();  // only when a held-out set
                                                 // is supplied
  double wall_time_s = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;

  void append(const TrainLog& other) {
    epochs.insert(epochs.end(), other.epochs.begin(), other.epochs.end());
  }

  void write_csv(std::ostream& out) const {
    out << "epoch,phase,recon_loss,gen_loss,disc_loss,disc_accuracy,"
           "disc_skipped_batches\n";
    char buf[160];
    for (const auto& e : epochs) {
      std::snprintf(buf, sizeof(buf), "%zu,%s,%.17g,%.17g,%.17g,%.17g,%zu\n",
                    e.epoch, e.phase.c_str(), e.recon_loss, e.gen_loss,
                    e.disc_loss, e.disc_accuracy, e.disc_skipped_batches);
      out << buf;
    }
  }
};

/// Optimizer state for the three update phases. The generator carries two
/// moment sets because it is driven by two different objectives.
struct TrainerState {
  nn::AdamState ae_encoder;
  nn::AdamState ae_generator;
  nn::AdamState adv_generator;
  nn::AdamState discriminator;
  std::uint64_t epochs_trained = 0;
};

inline TrainerState make_trainer_state(const MixGanModel& model,
                                       const TrainConfig& config) {
  TrainerState state;
  state.ae_encoder =
      nn::AdamState(model.encoder, {.learning_rate = config.lr_autoencoder});
  state.ae_generator =
      nn::AdamState(model.generator, {.learning_rate = config.lr_autoencoder});
  state.adv_generator =
      nn::AdamState(model.generator, {.learning_rate = config.lr_generator});
  state.discriminator = nn::AdamState(model.discriminator,
                                      {.learning_rate = config.lr_discriminator});
  return state;
}

// ---------------------------------------------------------------------------
// Per-phase losses and gradients. Exposed so the update applied by each
// phase can be checked against finite differences of its own objective.

struct AePhaseResult {
  double loss = 0.0;
  nn::MlpGradients encoder_grads;
  nn::MlpGradients generator_grads;
};

/// Phase 1 objective: squared-L2 reconstruction of the (mixed) input
/// through encode-then-generate, over all batch rows.
inline AePhaseResult compute_autoencoder_phase(const MixGanModel& model,
                                               const Matrix2D& x,
                                               bool train_mode, Rng& rng) {
  auto [z, enc_cache] = forward(model.encoder, x, train_mode, rng);
  auto [x_hat, gen_cache] = forward(model.generator, z, train_mode, rng);
  auto [loss, grad] = nn::mse_loss(x_hat, x);
  AePhaseResult result;
  result.loss = loss;
  result.generator_grads = nn::backward(model.generator, gen_cache, grad);
  result.encoder_grads =
      nn::backward(model.encoder, enc_cache, result.generator_grads.input);
  return result;
}

struct GenPhaseResult {
  double loss = 0.0;
  nn::MlpGradients generator_grads;
};

/// Phase 2 objective: non-saturating adversarial loss
/// -mean log D(G(E(x))) over all rows. Only generator gradients are taken;
/// the discriminator is traversed but frozen.
inline GenPhaseResult compute_generator_phase(const MixGanModel& model,
                                              const Matrix2D& x,
                                              bool train_mode, Rng& rng) {
  auto [z, enc_cache] = forward(model.encoder, x, train_mode, rng);
  auto [x_hat, gen_cache] = forward(model.generator, z, train_mode, rng);
  auto [probs, disc_cache] =
      forward(model.discriminator, x_hat, train_mode, rng);

  const double inv_n = 1.0 / static_cast<double>(probs.rows);
  double loss = 0.0;
  Matrix2D grad(probs.rows, 1);
  for (std::size_t r = 0; r < probs.rows; ++r) {
    const double p =
        std::clamp(probs(r, 0), nn::kBceClamp, 1.0 - nn::kBceClamp);
    loss += -std::log(p) * inv_n;
    grad(r, 0) = -inv_n / p;
  }

  GenPhaseResult result;
  result.loss = loss;
  const auto disc_grads = nn::backward(model.discriminator, disc_cache, grad,
                                       /*want_param_grads=*/false);
  result.generator_grads =
      nn::backward(model.generator, gen_cache, disc_grads.input);
  return result;
}

struct DiscPhaseResult {
  double loss = 0.0;
  double accuracy = 0.0;
  std::size_t n_real = 0;
  nn::MlpGradients discriminator_grads;
};

/// Phase 3 objective: BCE separating the given real rows (label 1) from
/// their generated counterparts G(E(x)) (label 0).
inline DiscPhaseResult compute_discriminator_phase(const MixGanModel& model,
                                                   const Matrix2D& x_real,
                                                   bool train_mode, Rng& rng) {
  DiscPhaseResult result;
  result.n_real = x_real.rows;
  if (x_real.rows == 0) return result;

  const Matrix2D z = forward(model.encoder, x_real, train_mode, rng).first;
  const Matrix2D fakes = forward(model.generator, z, train_mode, rng).first;
  const Matrix2D stacked = vstack(x_real, fakes);

  auto [probs, disc_cache] =
      forward(model.discriminator, stacked, train_mode, rng);
  std::vector<double> labels(stacked.rows, 0.0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(x_real.rows),
            1.0);
  auto [loss, grad_vec] = nn::bce_loss(probs.values, labels);
  result.loss = loss;

  std::size_t correct = 0;
  for (std::size_t r = 0; r < stacked.rows; ++r) {
    const bool said_real = probs(r, 0) > 0.5;
    if (said_real == (labels[r] == 1.0)) ++correct;
  }
  result.accuracy = static_cast<double>(correct) / static_cast<double>(stacked.rows);

  Matrix2D grad(stacked.rows, 1);
  grad.values = std::move(grad_vec);
  result.discriminator_grads =
      nn::backward(model.discriminator, disc_cache, grad);
  return result;
}

// ---------------------------------------------------------------------------
// Steps and loops

struct StepLosses {
  double recon = 0.0;
  double gen = 0.0;
  double disc = 0.0;
  double disc_accuracy = 0.0;
  bool disc_skipped = false;
};

/// One iteration of the update schedule: autoencoder first, then the
/// generator, finally the discriminator on rows with lambda in {0,1} only.
/// Each phase touches exactly its own parameter set.
inline StepLosses train_step(MixGanModel& model, const MixedBatch& batch,
                             const TrainConfig& config, TrainerState& state,
                             Rng& rng) {
  StepLosses losses;

  // Phase 1: reconstruct all rows, update encoder + generator.
  auto ae = compute_autoencoder_phase(model, batch.x_tilde, true, rng);
  losses.recon = ae.loss;
  nn::adam_step(model.encoder, ae.encoder_grads, state.ae_encoder);
  nn::adam_step(model.generator, ae.generator_grads, state.ae_generator);

  // Phase 2: push generated samples toward "real", update generator only.
  auto gen = compute_generator_phase(model, batch.x_tilde, true, rng);
  losses.gen = gen.loss;
  nn::adam_step(model.generator, gen.generator_grads, state.adv_generator);

  // Phase 3: discriminator sees only endpoint rows and their fakes.
  std::vector<std::size_t> real_rows;
  for (std::size_t r = 0; r < batch.size(); ++r) {
    if (batch.is_real[r]) real_rows.push_back(r);
  }
  if (real_rows.empty()) {
    losses.disc_skipped = true;
    return losses;
  }
  const Matrix2D x_real = take_rows(batch.x_tilde, real_rows);
  auto disc = compute_discriminator_phase(model, x_real, true, rng);
  losses.disc = disc.loss;
  losses.disc_accuracy = disc.accuracy;
  nn::adam_step(model.discriminator, disc.discriminator_grads,
                state.discriminator);

  (void)config;
  return losses;
}

namespace detail {

inline void check_finite(double loss, const char* phase, std::size_t epoch,
                         std::size_t step) {
  if (!std::isfinite(loss)) {
    throw NumericalError(std::string("non-finite ") + phase + " loss " +
                         std::to_string(loss) + " at epoch " +
                         std::to_string(epoch) + ", batch " +
                         std::to_string(step));
  }
}

/// Discriminator accuracy on a held-out set: real rows vs their eval-mode
/// reconstructions, threshold 0.5.
inline double heldout_disc_accuracy(const MixGanModel& model,
                                    const FeatureDataset& heldout) {
  const Matrix2D fakes = generate(model, encode(model, heldout.features));
  const auto p_real = discriminate(model, heldout.features);
  const auto p_fake = discriminate(model, fakes);
  std::size_t correct = 0;
  for (double p : p_real) correct += p > 0.5 ? 1 : 0;
  for (double p : p_fake) correct += p < 0.5 ? 1 : 0;
  return static_cast<double>(correct) /
         static_cast<double>(p_real.size() + p_fake.size());
}

}  // namespace detail

/// Autoencoder pretraining: phase-1 updates only, on mixed batches.
inline TrainLog pretrain_autoencoder(MixGanModel& model, TrainerState& state,
                                     const FeatureDataset& data,
                                     const TrainConfig& config, Rng& rng,
                                     const FeatureDataset* heldout = nullptr) {
  config.validate();
  TrainLog log;
  if (config.pretrain_epochs == 0) return log;
  const std::size_t steps =
      (data.size() + config.batch_size - 1) / config.batch_size;
  for (std::size_t epoch = 0; epoch < config.pretrain_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    double recon_sum = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
      const MixedBatch batch =
          make_mixed_batch(data, config.batch_size, config.mixup, rng);
      auto ae = compute_autoencoder_phase(model, batch.x_tilde, true, rng);
      detail::check_finite(ae.loss, "reconstruction", epoch, s);
      nn::adam_step(model.encoder, ae.encoder_grads, state.ae_encoder);
      nn::adam_step(model.generator, ae.generator_grads, state.ae_generator);
      recon_sum += ae.loss;
    }
    EpochRecord rec;
    rec.epoch = state.epochs_trained++;
    rec.phase = "pretrain";
    rec.recon_loss = recon_sum / static_cast<double>(steps);
    if (heldout != nullptr) {
      rec.heldout_disc_accuracy = detail::heldout_disc_accuracy(model, *heldout);
    }
    rec.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    log.epochs.push_back(std::move(rec));
  }
  return log;
}

inline TrainLog pretrain_autoencoder(MixGanModel& model,
                                     const FeatureDataset& data,
                                     const TrainConfig& config, Rng& rng) {
  TrainerState state = make_trainer_state(model, config);
  return pretrain_autoencoder(model, state, data, config, rng);
}

/// Full training: pretraining followed by the iterative three-phase
/// schedule. Deterministic for a fixed seed/rng.
inline TrainLog train(MixGanModel& model, TrainerState& state,
                      const FeatureDataset& data, const TrainConfig& config,
                      Rng& rng, const FeatureDataset* heldout = nullptr) {
  config.validate();
  if (data.size() == 0) {
    throw DataError(DataError::Kind::empty, "train: empty dataset");
  }
  TrainLog log = pretrain_autoencoder(model, state, data, config, rng, heldout);

  const std::size_t steps =
      (data.size() + config.batch_size - 1) / config.batch_size;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.phase = "adversarial";
    double recon_sum = 0.0, gen_sum = 0.0, disc_sum = 0.0, acc_sum = 0.0;
    std::size_t disc_steps = 0;
    for (std::size_t s = 0; s < steps; ++s) {
      const MixedBatch batch =
          make_mixed_batch(data, config.batch_size, config.mixup, rng);
      const StepLosses losses = train_step(model, batch, config, state, rng);
      detail::check_finite(losses.recon, "reconstruction", epoch, s);
      detail::check_finite(losses.gen, "generator", epoch, s);
      recon_sum += losses.recon;
      gen_sum += losses.gen;
      if (losses.disc_skipped) {
        ++rec.disc_skipped_batches;
      } else {
        detail::check_finite(losses.disc, "discriminator", epoch, s);
        disc_sum += losses.disc;
        acc_sum += losses.disc_accuracy;
        ++disc_steps;
      }
    }
    rec.epoch = state.epochs_trained++;
    rec.recon_loss = recon_sum / static_cast<double>(steps);
    rec.gen_loss = gen_sum / static_cast<double>(steps);
    rec.disc_loss = disc_steps > 0 ? disc_sum / static_cast<double>(disc_steps) : 0.0;
    rec.disc_accuracy =
        disc_steps > 0 ? acc_sum / static_cast<double>(disc_steps) : 0.0;
    if (heldout != nullptr) {
      rec.heldout_disc_accuracy = detail::heldout_disc_accuracy(model, *heldout);
    }
    rec.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    log.epochs.push_back(std::move(rec));
  }
  return log;
}

inline TrainLog train(MixGanModel& model, const FeatureDataset& data,
                      const TrainConfig& config, Rng& rng) {
  TrainerState state = make_trainer_state(model, config);
  return train(model, state, data, config, rng);
}

/// One synthetic vector G(E(x)) per input row, metadata inherited from the
/// source row. Eval mode throughout; expects data normalized with the same
/// statistics used for training.
inline FeatureDataset generate_synthetic_dataset(const MixGanModel& model,
                                                 const FeatureDataset& data) {
  FeatureDataset out = data;
  out.features = generate(model, encode(model, data.features));
  for (auto& id : out.ids) id = "syn:" + id;
  return out;
}

}  // namespace mixgan
