#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mixgan/baselines.hpp"
#include "mixgan/core/rng.hpp"
#include "mixgan/data.hpp"
#include "mixgan/eval.hpp"
#include "mixgan/mixup.hpp"
#include "mixgan/model.hpp"
#include "mixgan/training.hpp"

namespace mixgan {

struct WithinClassifierConfigs {
  ClassifierConfig real;      // setting (i), 400 hidden units
  ClassifierConfig synthetic; // setting (ii), 400 hidden units
  ClassifierConfig combined;  // setting (iii), 1000 hidden units

  WithinClassifierConfigs() { combined.hidden_units = 1000; }
};

struct WithinOptions {
  // Setting (ii) tests on synthetic test features by default; this flag
  // switches it to the real test fold instead.
  bool synthetic_test_on_real = false;
};

namespace detail {

inline Rng task_rng(std::uint64_t run_seed, std::uint64_t task_index) {
  return Rng(splitmix64(splitmix64(run_seed) ^
                        splitmix64(task_index + 0x7464bULL)));
}

/// A dataset of virtual examples drawn the same way training batches are:
/// ceil(N/B) batches of make_mixed_batch, concatenated. one_hot carries the
/// mixed (soft) labels; metadata is inherited from the first source row.
inline FeatureDataset make_mixed_training_set(const FeatureDataset& data,
                                              const MixupConfig& mixup,
                                              std::size_t batch_size,
                                              Rng& rng) {
  const std::size_t steps = (data.size() + batch_size - 1) / batch_size;
  const std::size_t total = steps * batch_size;
  FeatureDataset out;
  out.corpus = data.corpus;
  out.features = Matrix2D(total, data.dim());
  out.one_hot = Matrix2D(total, kNumClasses);
  out.labels.reserve(total);
  out.ids.reserve(total);
  out.sessions.reserve(total);
  out.speakers.reserve(total);
  std::size_t row = 0;
  for (std::size_t s = 0; s < steps; ++s) {
    const MixedBatch batch = make_mixed_batch(data, batch_size, mixup, rng);
    for (std::size_t r = 0; r < batch.size(); ++r, ++row) {
      std::copy(batch.x_tilde.row(r).begin(), batch.x_tilde.row(r).end(),
                out.features.row(row).begin());
      std::copy(batch.y_tilde.row(r).begin(), batch.y_tilde.row(r).end(),
                out.one_hot.row(row).begin());
      auto y = batch.y_tilde.row(r);
      out.labels.push_back(static_cast<int>(
          std::max_element(y.begin(), y.end()) - y.begin()));
      const std::size_t src = batch.source_indices[r].first;
      out.ids.push_back("mix:" + std::to_string(row));
      out.sessions.push_back(data.sessions[src]);
      out.speakers.push_back(data.speakers[src]);
    }
  }
  return out;
}

inline void score(SettingResult& setting, std::uint64_t seed,
                  const std::string& fold, std::span<const int> truth,
                  std::span<const int> preds, const std::string& param_hash) {
  const ConfusionMatrix cm = confusion(truth, preds);
  setting.runs.push_back(RunEntry{seed, fold, uar(cm), param_hash});
  setting.aggregated_confusion.add(cm);
}

struct DevTunedClassifier {
  nn::Mlp model;
  std::size_t best_epoch = 0;
  double best_dev_uar = 0.0;
};

/// Trains for up to config.epochs, checking dev UAR every eval_every
/// epochs, and returns the parameters from the best dev point (earliest
/// epoch wins ties).
inline DevTunedClassifier train_classifier_dev_tuned(
    const Matrix2D& features, const Matrix2D& targets,
    const FeatureDataset& dev, const ClassifierConfig& config, Rng& rng,
    std::size_t eval_every) {
  config.validate();
  nn::Mlp clf = make_classifier(features.cols, config, rng);
  nn::AdamState state(clf, {.learning_rate = config.learning_rate});

  std::vector<std::size_t> order(features.rows);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  DevTunedClassifier best;
  best.model = clf;
  best.best_dev_uar = -1.0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_indices(order, rng);
    for (std::size_t start = 0; start < order.size();
         start += config.batch_size) {
      const std::size_t stop =
          std::min(start + config.batch_size, order.size());
      const std::span<const std::size_t> idx(order.data() + start,
                                             stop - start);
      auto [logits, cache] = forward(clf, take_rows(features, idx), true, rng);
      auto [loss, grad] = nn::softmax_ce_loss(logits, take_rows(targets, idx));
      if (!std::isfinite(loss)) {
        throw NumericalError("dev-tuned classifier: non-finite loss");
      }
      nn::adam_step(clf, nn::backward(clf, cache, grad), state);
    }
    if (epoch % eval_every == 0 || epoch == config.epochs) {
      const double dev_uar =
          uar(confusion(dev.labels, predict(clf, dev.features)));
      if (dev_uar > best.best_dev_uar) {
        best.best_dev_uar = dev_uar;
        best.best_epoch = epoch;
        best.model = clf;
      }
    }
  }
  return best;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Within-corpus experiment: real / synthetic / real+synthetic features
// under leave-one-session-out cross-validation.

inline EvalReport run_within_corpus(const FeatureDataset& data,
                                    MixGanConfig model_cfg,
                                    const TrainConfig& train_cfg,
                                    const WithinClassifierConfigs& clf_cfgs,
                                    std::span<const std::uint64_t> seeds,
                                    const WithinOptions& options = {}) {
  model_cfg.input_dim = data.dim();
  model_cfg.validate();
  train_cfg.validate();

  EvalReport report;
  report.experiment = "within";
  report.settings.resize(3);
  report.settings[0].setting = "real";
  report.settings[0].published_reference = "60.51±0.57";
  report.settings[1].setting = "synthetic";
  report.settings[1].published_reference = "45.75±0.81";
  report.settings[2].setting = "real_plus_synthetic";
  report.settings[2].published_reference = "61.05±0.68";

  const auto folds = loso_splits(data);
  std::uint64_t param_hash = kFnvOffset;

  for (std::uint64_t seed : seeds) {
    for (std::size_t f = 0; f < folds.size(); ++f) {
      Rng rng = detail::task_rng(seed, f);
      const FeatureDataset train_raw = subset(data, folds[f].train_idx);
      const FeatureDataset test_raw = subset(data, folds[f].test_idx);

      // Min-max statistics come from the training fold only.
      const NormalizationStats stats =
          fit_normalizer(train_raw, NormKind::minmax);
      const FeatureDataset train_n = apply_normalizer(stats, train_raw);
      const FeatureDataset test_n = apply_normalizer(stats, test_raw);

      MixGanModel model = build_model(model_cfg, rng);
      TrainerState state = make_trainer_state(model, train_cfg);
      train(model, state, train_n, train_cfg, rng);

      const FeatureDataset syn_train = generate_synthetic_dataset(model, train_n);
      const FeatureDataset syn_test = generate_synthetic_dataset(model, test_n);

      const nn::Mlp clf_real = train_classifier(train_n, clf_cfgs.real, rng);
      const nn::Mlp clf_syn = train_classifier(syn_train, clf_cfgs.synthetic, rng);
      const FeatureDataset both = concat(train_n, syn_train);
      const nn::Mlp clf_both = train_classifier(both, clf_cfgs.combined, rng);

      // Everything trained in this task, hashed before any test data is
      // evaluated.
      std::uint64_t task_hash = kFnvOffset;
      hash_params(task_hash, model.encoder);
      hash_params(task_hash, model.generator);
      hash_params(task_hash, model.discriminator);
      hash_params(task_hash, clf_real);
      hash_params(task_hash, clf_syn);
      hash_params(task_hash, clf_both);
      const std::string task_hash_hex = hash_to_hex(task_hash);
      hash_bytes(param_hash, task_hash_hex.data(), task_hash_hex.size());

      detail::score(report.settings[0], seed, folds[f].held_out_session,
                    test_n.labels, predict(clf_real, test_n.features),
                    task_hash_hex);
      const FeatureDataset& syn_eval =
          options.synthetic_test_on_real ? test_n : syn_test;
      detail::score(report.settings[1], seed, folds[f].held_out_session,
                    syn_eval.labels, predict(clf_syn, syn_eval.features),
                    task_hash_hex);
      detail::score(report.settings[2], seed, folds[f].held_out_session,
                    test_n.labels, predict(clf_both, test_n.features),
                    task_hash_hex);
    }
  }

  for (auto& s : report.settings) finalize_setting(s);
  report.trained_param_hash = hash_to_hex(param_hash);
  return report;
}

// ---------------------------------------------------------------------------
// Encoded-representation experiment: classify k-dimensional codes from the
// proposed encoder, PCA, and a plain autoencoder, each with and without
// mixup on the training data.

inline EvalReport run_encoded(const FeatureDataset& data, std::size_t k,
                              MixGanConfig model_cfg, TrainConfig train_cfg,
                              const BaselineAeConfig& ae_cfg,
                              const ClassifierConfig& clf_cfg,
                              std::span<const std::uint64_t> seeds) {
  if (k >= data.dim()) {
    throw ConfigError("run_encoded: k must be smaller than the feature dim");
  }
  model_cfg.input_dim = data.dim();
  model_cfg.latent_dim = k;
  model_cfg.validate();

  EvalReport report;
  report.experiment = "encoded";
  const std::pair<std::string, std::string> names[] = {
      {"proposed", "59.6"},
      {"proposed_without_mixup", ""},
      {"pca_with_mixup", "58.3"},
      {"pca", "57.7"},
      {"autoencoder_with_mixup", "58.5"},
      {"autoencoder", "57.8"},
  };
  for (const auto& [name, ref] : names) {
    SettingResult s;
    s.setting = name;
    s.published_reference = ref;
    report.settings.push_back(std::move(s));
  }

  TrainConfig no_mixup_cfg = train_cfg;
  no_mixup_cfg.mixup.real_fraction = 1.0;  // every row an exact endpoint

  const auto folds = loso_splits(data);
  std::uint64_t param_hash = kFnvOffset;

  for (std::uint64_t seed : seeds) {
    for (std::size_t f = 0; f < folds.size(); ++f) {
      Rng rng = detail::task_rng(seed, 0x1000 + f);
      const FeatureDataset train_raw = subset(data, folds[f].train_idx);
      const FeatureDataset test_raw = subset(data, folds[f].test_idx);
      const NormalizationStats stats =
          fit_normalizer(train_raw, NormKind::minmax);
      const FeatureDataset train_n = apply_normalizer(stats, train_raw);
      const FeatureDataset test_n = apply_normalizer(stats, test_raw);
      const std::string& fold_name = folds[f].held_out_session;

      // The same mixed training set feeds every "with mixup" reducer.
      const FeatureDataset mixed = detail::make_mixed_training_set(
          train_n, train_cfg.mixup, train_cfg.batch_size, rng);

      std::uint64_t task_hash = kFnvOffset;
      std::vector<std::pair<std::size_t, std::vector<int>>> pending;
      const auto classify_codes =
          [&](std::size_t setting_idx, const Matrix2D& train_codes,
              const Matrix2D& train_targets, const Matrix2D& test_codes) {
            const nn::Mlp clf =
                train_classifier(train_codes, train_targets, clf_cfg, rng);
            hash_params(task_hash, clf);
            pending.emplace_back(setting_idx, predict(clf, test_codes));
          };
      const auto hash_gan = [&](const MixGanModel& model) {
        hash_params(task_hash, model.encoder);
        hash_params(task_hash, model.generator);
        hash_params(task_hash, model.discriminator);
      };

      // Proposed encoder, mixup on: the GAN trains on mixed batches and the
      // classifier consumes encoded mixed samples with their soft labels.
      {
        MixGanModel model = build_model(model_cfg, rng);
        TrainerState state = make_trainer_state(model, train_cfg);
        train(model, state, train_n, train_cfg, rng);
        hash_gan(model);
        classify_codes(0, encode(model, mixed.features), mixed.one_hot,
                       encode(model, test_n.features));
      }

      // Proposed encoder, mixup off: endpoint-only batches.
      {
        MixGanModel model = build_model(model_cfg, rng);
        TrainerState state = make_trainer_state(model, no_mixup_cfg);
        train(model, state, train_n, no_mixup_cfg, rng);
        hash_gan(model);
        classify_codes(1, encode(model, train_n.features), train_n.one_hot,
                       encode(model, test_n.features));
      }

      // PCA with and without mixup.
      {
        const PcaModel pca = pca_fit(mixed.features, k);
        hash_bytes(task_hash, pca.components.values.data(),
                   pca.components.values.size() * sizeof(double));
        classify_codes(2, pca_transform(pca, mixed.features), mixed.one_hot,
                       pca_transform(pca, test_n.features));
      }
      {
        const PcaModel pca = pca_fit(train_n.features, k);
        hash_bytes(task_hash, pca.components.values.data(),
                   pca.components.values.size() * sizeof(double));
        classify_codes(3, pca_transform(pca, train_n.features),
                       train_n.one_hot, pca_transform(pca, test_n.features));
      }

      // Plain autoencoder with and without mixup.
      {
        const BaselineAeModel ae = baseline_ae_train(mixed, k, ae_cfg, rng);
        hash_params(task_hash, ae.encoder);
        hash_params(task_hash, ae.decoder);
        classify_codes(4, baseline_ae_encode(ae, mixed.features),
                       mixed.one_hot, baseline_ae_encode(ae, test_n.features));
      }
      {
        const BaselineAeModel ae = baseline_ae_train(train_n, k, ae_cfg, rng);
        hash_params(task_hash, ae.encoder);
        hash_params(task_hash, ae.decoder);
        classify_codes(5, baseline_ae_encode(ae, train_n.features),
                       train_n.one_hot,
                       baseline_ae_encode(ae, test_n.features));
      }

      const std::string task_hash_hex = hash_to_hex(task_hash);
      hash_bytes(param_hash, task_hash_hex.data(), task_hash_hex.size());
      for (auto& [idx, preds] : pending) {
        detail::score(report.settings[idx], seed, fold_name, test_n.labels,
                      preds, task_hash_hex);
      }
    }
  }

  for (auto& s : report.settings) finalize_setting(s);
  report.trained_param_hash = hash_to_hex(param_hash);
  return report;
}

// ---------------------------------------------------------------------------
// Cross-corpus experiment: train on the source corpus, tune classifier
// epochs on a stratified dev split of the target, report UAR on the rest.

inline EvalReport run_cross_corpus(const FeatureDataset& source,
                                   const FeatureDataset& target,
                                   MixGanConfig model_cfg,
                                   const TrainConfig& train_cfg,
                                   const ClassifierConfig& clf_cfg,
                                   std::span<const std::uint64_t> seeds,
                                   double dev_fraction = 0.3,
                                   std::size_t eval_every = 10) {
  if (source.dim() != target.dim()) {
    throw DimensionError("run_cross_corpus: corpora have different dims");
  }
  model_cfg.input_dim = source.dim();
  model_cfg.validate();
  train_cfg.validate();

  EvalReport report;
  report.experiment = "cross";
  report.settings.resize(3);
  report.settings[0].setting = "real";
  report.settings[0].published_reference = "46.0±0.57";
  report.settings[1].setting = "synthetic";
  report.settings[1].published_reference = "42.15±1.12";
  report.settings[2].setting = "real_plus_synthetic";
  report.settings[2].published_reference = "46.60±0.45";

  // Each corpus is z-normalized on its own statistics.
  const FeatureDataset source_n =
      apply_normalizer(fit_normalizer(source, NormKind::zscore), source);
  const FeatureDataset target_n =
      apply_normalizer(fit_normalizer(target, NormKind::zscore), target);

  std::uint64_t param_hash = kFnvOffset;

  for (std::uint64_t seed : seeds) {
    Rng rng = detail::task_rng(seed, 0x2000);

    MixGanModel model = build_model(model_cfg, rng);
    TrainerState state = make_trainer_state(model, train_cfg);
    train(model, state, source_n, train_cfg, rng);
    const FeatureDataset syn_source = generate_synthetic_dataset(model, source_n);

    const auto [dev, test] =
        stratified_split(target_n, dev_fraction, detail::splitmix64(seed));

    std::uint64_t task_hash = kFnvOffset;
    hash_params(task_hash, model.encoder);
    hash_params(task_hash, model.generator);
    hash_params(task_hash, model.discriminator);

    std::vector<std::pair<std::size_t, nn::Mlp>> tuned_classifiers;
    const auto tune_setting = [&](std::size_t idx, const Matrix2D& features,
                                  const Matrix2D& targets) {
      auto tuned = detail::train_classifier_dev_tuned(
          features, targets, dev, clf_cfg, rng, eval_every);
      hash_params(task_hash, tuned.model);
      tuned_classifiers.emplace_back(idx, std::move(tuned.model));
    };

    tune_setting(0, source_n.features, source_n.one_hot);
    tune_setting(1, syn_source.features, syn_source.one_hot);
    const FeatureDataset both = concat(source_n, syn_source);
    tune_setting(2, both.features, both.one_hot);

    const std::string task_hash_hex = hash_to_hex(task_hash);
    hash_bytes(param_hash, task_hash_hex.data(), task_hash_hex.size());
    for (const auto& [idx, clf] : tuned_classifiers) {
      detail::score(report.settings[idx], seed, "-", test.labels,
                    predict(clf, test.features), task_hash_hex);
    }
  }

  for (auto& s : report.settings) finalize_setting(s);
  report.trained_param_hash = hash_to_hex(param_hash);
  return report;
}

}  // namespace mixgan
