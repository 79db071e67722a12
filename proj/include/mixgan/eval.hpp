#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mixgan/core/error.hpp"
#include "mixgan/core/matrix.hpp"
#include "mixgan/core/rng.hpp"
#include "mixgan/data.hpp"
#include "mixgan/nn/adam.hpp"
#include "mixgan/nn/losses.hpp"
#include "mixgan/nn/mlp.hpp"

namespace mixgan {

// ---------------------------------------------------------------------------
// Downstream DNN classifier

struct ClassifierConfig {
  std::size_t hidden_units = 400;
  std::size_t hidden_layers = 2;
  double dropout_rate = 0.5;
  double learning_rate = 1e-5;
  std::size_t epochs = 300;
  std::size_t batch_size = 64;
  double leaky_slope = 0.01;

  void validate() const {
    if (hidden_units == 0 || hidden_layers == 0 || epochs == 0 ||
        batch_size == 0) {
      throw ConfigError("classifier: counts must be positive");
    }
    if (learning_rate <= 0.0) {
      throw ConfigError("classifier: learning_rate must be > 0");
    }
    if (dropout_rate < 0.0 || dropout_rate > 1.0) {
      throw ConfigError("classifier: dropout_rate outside [0,1]");
    }
  }
};

inline nn::Mlp make_classifier(std::size_t input_dim,
                               const ClassifierConfig& config, Rng& rng) {
  nn::Mlp mlp;
  std::size_t prev = input_dim;
  for (std::size_t l = 0; l < config.hidden_layers; ++l) {
    mlp.layers.push_back(nn::make_dense_layer(
        prev, config.hidden_units, nn::Activation::leaky_relu, rng,
        config.leaky_slope));
    prev = config.hidden_units;
  }
  mlp.layers.push_back(
      nn::make_dense_layer(prev, kNumClasses, nn::Activation::linear, rng));
  if (config.dropout_rate > 0.0 && config.hidden_layers >= 2) {
    mlp.dropout_rate = config.dropout_rate;
    mlp.dropout_positions.insert(1);
  }
  mlp.validate();
  return mlp;
}

namespace detail {

inline void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::swap(idx[i - 1], idx[rng.uniform_int(i)]);
  }
}

}  // namespace detail

/// Softmax cross-entropy training against the given target distributions
/// (one-hot rows reproduce hard-label training exactly).
inline nn::Mlp train_classifier(const Matrix2D& features,
                                const Matrix2D& targets,
                                const ClassifierConfig& config, Rng& rng) {
  config.validate();
  if (features.rows == 0) {
    throw DataError(DataError::Kind::empty, "train_classifier: empty data");
  }
  if (targets.rows != features.rows || targets.cols != kNumClasses) {
    throw DimensionError("train_classifier: target shape mismatch");
  }

  nn::Mlp clf = make_classifier(features.cols, config, rng);
  nn::AdamState state(clf, {.learning_rate = config.learning_rate});

  std::vector<std::size_t> order(features.rows);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    detail::shuffle_indices(order, rng);
    for (std::size_t start = 0; start < order.size();
         start += config.batch_size) {
      const std::size_t stop =
          std::min(start + config.batch_size, order.size());
      const std::span<const std::size_t> idx(order.data() + start,
                                             stop - start);
      const Matrix2D batch = take_rows(features, idx);
      const Matrix2D batch_targets = take_rows(targets, idx);

      auto [logits, cache] = forward(clf, batch, true, rng);
      auto [loss, grad] = nn::softmax_ce_loss(logits, batch_targets);
      if (!std::isfinite(loss)) {
        throw NumericalError("train_classifier: non-finite loss at epoch " +
                             std::to_string(epoch));
      }
      auto grads = nn::backward(clf, cache, grad);
      nn::adam_step(clf, grads, state);
    }
  }
  return clf;
}

inline nn::Mlp train_classifier(const FeatureDataset& train,
                                const ClassifierConfig& config, Rng& rng) {
  return train_classifier(train.features, train.one_hot, config, rng);
}

inline std::vector<int> predict(const nn::Mlp& classifier,
                                const Matrix2D& features) {
  Rng rng(0);
  const Matrix2D logits = forward(classifier, features, false, rng).first;
  std::vector<int> preds(logits.rows);
  for (std::size_t r = 0; r < logits.rows; ++r) {
    auto row = logits.row(r);
    preds[r] = static_cast<int>(
        std::max_element(row.begin(), row.end()) - row.begin());
  }
  return preds;
}

// ---------------------------------------------------------------------------
// Metrics

/// 4x4 count grid, rows = true class, columns = predicted class.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

  std::uint64_t total() const {
    std::uint64_t n = 0;
    for (const auto& row : counts) {
      for (std::uint64_t c : row) n += c;
    }
    return n;
  }

  std::uint64_t row_sum(std::size_t r) const {
    std::uint64_t n = 0;
    for (std::uint64_t c : counts[r]) n += c;
    return n;
  }

  void add(const ConfusionMatrix& other) {
    for (std::size_t i = 0; i < kNumClasses; ++i) {
      for (std::size_t j = 0; j < kNumClasses; ++j) {
        counts[i][j] += other.counts[i][j];
      }
    }
  }
};

inline ConfusionMatrix confusion(std::span<const int> true_labels,
                                 std::span<const int> predictions) {
  if (true_labels.size() != predictions.size()) {
    throw DimensionError("confusion: length mismatch");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < true_labels.size(); ++i) {
    const int t = true_labels[i];
    const int p = predictions[i];
    if (t < 0 || static_cast<std::size_t>(t) >= kNumClasses || p < 0 ||
        static_cast<std::size_t>(p) >= kNumClasses) {
      throw DimensionError("confusion: class index out of range");
    }
    ++cm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  return cm;
}

/// Recall per class; classes absent from the true labels yield nullopt.
inline std::array<std::optional<double>, kNumClasses> per_class_recall(
    const ConfusionMatrix& cm) {
  std::array<std::optional<double>, kNumClasses> recall;
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    const std::uint64_t n = cm.row_sum(i);
    if (n > 0) {
      recall[i] = static_cast<double>(cm.counts[i][i]) / static_cast<double>(n);
    }
  }
  return recall;
}

/// Unweighted average recall. Classes with an empty row are excluded from
/// the mean (callers surface the exclusion as a report warning).
inline double uar(const ConfusionMatrix& cm) {
  const auto recall = per_class_recall(cm);
  double sum = 0.0;
  std::size_t present = 0;
  for (const auto& r : recall) {
    if (r) {
      sum += *r;
      ++present;
    }
  }
  if (present == 0) {
    throw DataError(DataError::Kind::empty, "uar: confusion matrix is empty");
  }
  return sum / static_cast<double>(present);
}

inline std::vector<std::size_t> absent_classes(const ConfusionMatrix& cm) {
  std::vector<std::size_t> absent;
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    if (cm.row_sum(i) == 0) absent.push_back(i);
  }
  return absent;
}

// ---------------------------------------------------------------------------
// Reports

struct RunEntry {
  std::uint64_t seed = 0;
  std::string fold;  // held-out session name, or "-" when the experiment
                     // has no folds
  double uar = 0.0;
  // Hash of every parameter trained in this run's task. Equal hashes across
  // runs that differ only in evaluation-side data prove the absence of
  // test-set leakage.
  std::string param_hash;
};

struct SettingResult {
  std::string setting;
  std::vector<RunEntry> runs;
  std::vector<std::pair<std::uint64_t, double>> per_seed_uar;  // seed -> mean
  double uar_mean = 0.0;
  double uar_std = 0.0;  // population std over per-seed means
  ConfusionMatrix aggregated_confusion;
  std::vector<std::string> warnings;
  std::string published_reference;  // reported value carried for comparison
};

struct EvalReport {
  std::string experiment;  // within | encoded | cross
  std::vector<SettingResult> settings;
  std::string trained_param_hash;  // FNV-1a over all trained parameters

  const SettingResult& setting(const std::string& name) const {
    for (const auto& s : settings) {
      if (s.setting == name) return s;
    }
    throw ConfigError("report has no setting '" + name + "'");
  }
};

/// Fills per-seed means and the mean/std over seeds from the raw run list.
inline void finalize_setting(SettingResult& s) {
  std::map<std::uint64_t, std::pair<double, std::size_t>> by_seed;
  for (const auto& r : s.runs) {
    auto& [sum, n] = by_seed[r.seed];
    sum += r.uar;
    ++n;
  }
  s.per_seed_uar.clear();
  double mean = 0.0;
  for (const auto& [seed, agg] : by_seed) {
    const double m = agg.first / static_cast<double>(agg.second);
    s.per_seed_uar.emplace_back(seed, m);
    mean += m;
  }
  mean /= static_cast<double>(by_seed.size());
  double var = 0.0;
  for (const auto& [seed, m] : s.per_seed_uar) {
    var += (m - mean) * (m - mean);
  }
  s.uar_mean = mean;
  s.uar_std = std::sqrt(var / static_cast<double>(s.per_seed_uar.size()));

  const auto absent = absent_classes(s.aggregated_confusion);
  for (std::size_t cls : absent) {
    s.warnings.push_back("class '" + std::string(kClassNames[cls]) +
                         "' absent from test labels; excluded from UAR");
  }
}

// FNV-1a over raw parameter bytes, used to verify that evaluation-side data
// can never influence trained parameters.
inline void hash_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
}

inline void hash_params(std::uint64_t& h, const nn::Mlp& mlp) {
  for (const auto& layer : mlp.layers) {
    hash_bytes(h, layer.weights.values.data(),
               layer.weights.values.size() * sizeof(double));
    hash_bytes(h, layer.bias.data(), layer.bias.size() * sizeof(double));
  }
}

inline std::string hash_to_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json confusion_to_json(const ConfusionMatrix& cm) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : cm.counts) {
    rows.push_back(row);
  }
  return rows;
}

inline nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["experiment"] = report.experiment;
  j["classes"] = kClassNames;
  j["trained_param_hash"] = report.trained_param_hash;
  nlohmann::json settings = nlohmann::json::object();
  for (const auto& s : report.settings) {
    nlohmann::json js;
    js["uar_mean"] = s.uar_mean;
    js["uar_std"] = s.uar_std;
    nlohmann::json per_seed = nlohmann::json::array();
    for (const auto& [seed, m] : s.per_seed_uar) {
      per_seed.push_back({{"seed", seed}, {"uar", m}});
    }
    js["per_seed"] = per_seed;
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : s.runs) {
      runs.push_back({{"seed", r.seed},
                      {"fold", r.fold},
                      {"uar", r.uar},
                      {"param_hash", r.param_hash}});
    }
    js["runs"] = runs;
    js["confusion"] = confusion_to_json(s.aggregated_confusion);
    nlohmann::json recalls = nlohmann::json::array();
    for (const auto& r : per_class_recall(s.aggregated_confusion)) {
      if (r) {
        recalls.push_back(*r);
      } else {
        recalls.push_back(nullptr);
      }
    }
    js["per_class_recall"] = recalls;
    js["warnings"] = s.warnings;
    if (!s.published_reference.empty()) {
      js["published_reference"] = s.published_reference;
    }
    settings[s.setting] = std::move(js);
  }
  j["settings"] = std::move(settings);
  return j;
}

inline void write_report_csv(const EvalReport& report, std::ostream& out) {
  out << "experiment,setting,seed,fold,uar\n";
  char buf[64];
  for (const auto& s : report.settings) {
    for (const auto& r : s.runs) {
      std::snprintf(buf, sizeof(buf), "%llu",
                    static_cast<unsigned long long>(r.seed));
      out << report.experiment << ',' << s.setting << ',' << buf << ','
          << r.fold << ',';
      std::snprintf(buf, sizeof(buf), "%.17g\n", r.uar);
      out << buf;
    }
  }
}

/// One 4x4 block per setting with class-name headers, classes in the fixed
/// order angry, happy, neutral, sad.
inline void write_confusion_csv(const ConfusionMatrix& cm, std::ostream& out) {
  out << "true\\predicted";
  for (const auto& name : kClassNames) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    out << kClassNames[i];
    for (std::size_t j = 0; j < kNumClasses; ++j) {
      out << ',' << cm.counts[i][j];
    }
    out << '\n';
  }
}

}  // namespace mixgan
