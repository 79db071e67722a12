#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mixgan/baselines.hpp"
#include "mixgan/core/error.hpp"
#include "mixgan/data.hpp"
#include "mixgan/drivers.hpp"
#include "mixgan/eval.hpp"
#include "mixgan/model.hpp"
#include "mixgan/training.hpp"

namespace mixgan {

/// Where a run gets its feature vectors: an existing CSV or a generated
/// benchmark corpus.
struct DataSource {
  std::optional<std::string> path;
  std::optional<BenchmarkConfig> benchmark;
};

/// One experiment run, parsed from a JSON document
/// (see schema/run_config.schema.json).
struct RunConfig {
  std::string experiment;  // within | encoded | cross
  std::string output_dir = "runs";
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  DataSource data;
  std::optional<DataSource> target_data;  // cross only
  MixGanConfig model;
  TrainConfig train;
  ClassifierConfig classifier;  // encoded + cross experiments
  WithinClassifierConfigs within_classifiers;
  BaselineAeConfig baseline_autoencoder;
  std::size_t encoded_dim = 25;
  double dev_fraction = 0.3;
  std::size_t eval_every = 10;
  bool synthetic_test_on_real = false;
};

namespace cfg_detail {

using nlohmann::json;

[[noreturn]] inline void fail(const std::string& path, const std::string& msg) {
  throw ConfigError("config: field '" + path + "' " + msg);
}

inline void require_keys(const json& j, const std::string& path,
                         std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(path, "must be an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) {
      if (key == a) {
        known = true;
        break;
      }
    }
    if (!known) fail(path + "." + key, "is not a recognized field");
  }
}

template <typename T>
T get_number(const json& j, const std::string& path, const char* key,
             T fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  std::string p = path + "." + key;
  if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) fail(p, "must be a number");
  } else {
    if (!v.is_number_unsigned()) fail(p, "must be a non-negative integer");
  }
  return v.get<T>();
}

inline std::string get_string(const json& j, const std::string& path,
                              const char* key, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) fail(path + "." + key, "must be a string");
  return j.at(key).get<std::string>();
}

inline bool get_bool(const json& j, const std::string& path, const char* key,
                     bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) fail(path + "." + key, "must be a boolean");
  return j.at(key).get<bool>();
}

inline std::vector<std::size_t> get_size_list(const json& j,
                                              const std::string& path,
                                              const char* key,
                                              std::vector<std::size_t> fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_array() || v.empty()) {
    fail(path + "." + key, "must be a non-empty array of positive integers");
  }
  std::vector<std::size_t> out;
  for (const auto& e : v) {
    if (!e.is_number_unsigned() || e.get<std::size_t>() == 0) {
      fail(path + "." + key, "must contain positive integers only");
    }
    out.push_back(e.get<std::size_t>());
  }
  return out;
}

inline MixupConfig parse_mixup(const json& j, const std::string& path) {
  require_keys(j, path, {"alpha", "real_fraction", "seed"});
  MixupConfig m;
  m.alpha = get_number(j, path, "alpha", m.alpha);
  m.real_fraction = get_number(j, path, "real_fraction", m.real_fraction);
  m.seed = get_number<std::uint64_t>(j, path, "seed", m.seed);
  try {
    m.validate();
  } catch (const ConfigError& e) {
    fail(path, std::string("invalid: ") + e.what());
  }
  return m;
}

inline MixGanConfig parse_model(const json& j, const std::string& path) {
  require_keys(j, path,
               {"input_dim", "latent_dim", "encoder_hidden",
                "discriminator_hidden", "dropout_rate", "leaky_slope"});
  MixGanConfig m;
  m.input_dim = get_number(j, path, "input_dim", m.input_dim);
  m.latent_dim = get_number(j, path, "latent_dim", m.latent_dim);
  m.encoder_hidden = get_size_list(j, path, "encoder_hidden", m.encoder_hidden);
  m.discriminator_hidden =
      get_size_list(j, path, "discriminator_hidden", m.discriminator_hidden);
  m.dropout_rate = get_number(j, path, "dropout_rate", m.dropout_rate);
  m.leaky_slope = get_number(j, path, "leaky_slope", m.leaky_slope);
  try {
    m.validate();
  } catch (const ConfigError& e) {
    fail(path, std::string("invalid: ") + e.what());
  }
  return m;
}

inline TrainConfig parse_train(const json& j, const std::string& path) {
  require_keys(j, path,
               {"pretrain_epochs", "epochs", "batch_size", "lr_autoencoder",
                "lr_generator", "lr_discriminator", "recon_weight", "mixup",
                "seed"});
  TrainConfig t;
  t.pretrain_epochs =
      get_number(j, path, "pretrain_epochs", t.pretrain_epochs);
  t.epochs = get_number(j, path, "epochs", t.epochs);
  t.batch_size = get_number(j, path, "batch_size", t.batch_size);
  t.lr_autoencoder = get_number(j, path, "lr_autoencoder", t.lr_autoencoder);
  t.lr_generator = get_number(j, path, "lr_generator", t.lr_generator);
  t.lr_discriminator =
      get_number(j, path, "lr_discriminator", t.lr_discriminator);
  t.recon_weight = get_number(j, path, "recon_weight", t.recon_weight);
  t.seed = get_number<std::uint64_t>(j, path, "seed", t.seed);
  if (j.contains("mixup")) t.mixup = parse_mixup(j.at("mixup"), path + ".mixup");
  try {
    t.validate();
  } catch (const ConfigError& e) {
    fail(path, std::string("invalid: ") + e.what());
  }
  return t;
}

inline ClassifierConfig parse_classifier(const json& j, const std::string& path,
                                         const ClassifierConfig& defaults) {
  require_keys(j, path,
               {"hidden_units", "hidden_layers", "dropout_rate",
                "learning_rate", "epochs", "batch_size", "leaky_slope"});
  ClassifierConfig c = defaults;
  c.hidden_units = get_number(j, path, "hidden_units", c.hidden_units);
  c.hidden_layers = get_number(j, path, "hidden_layers", c.hidden_layers);
  c.dropout_rate = get_number(j, path, "dropout_rate", c.dropout_rate);
  c.learning_rate = get_number(j, path, "learning_rate", c.learning_rate);
  c.epochs = get_number(j, path, "epochs", c.epochs);
  c.batch_size = get_number(j, path, "batch_size", c.batch_size);
  c.leaky_slope = get_number(j, path, "leaky_slope", c.leaky_slope);
  try {
    c.validate();
  } catch (const ConfigError& e) {
    fail(path, std::string("invalid: ") + e.what());
  }
  return c;
}

inline BaselineAeConfig parse_baseline_ae(const json& j,
                                          const std::string& path) {
  require_keys(j, path,
               {"hidden1", "hidden2", "epochs", "batch_size", "learning_rate"});
  BaselineAeConfig c;
  c.hidden1 = get_number(j, path, "hidden1", c.hidden1);
  c.hidden2 = get_number(j, path, "hidden2", c.hidden2);
  c.epochs = get_number(j, path, "epochs", c.epochs);
  c.batch_size = get_number(j, path, "batch_size", c.batch_size);
  c.learning_rate = get_number(j, path, "learning_rate", c.learning_rate);
  try {
    c.validate();
  } catch (const ConfigError& e) {
    fail(path, std::string("invalid: ") + e.what());
  }
  return c;
}

inline BenchmarkConfig parse_benchmark(const json& j, const std::string& path) {
  require_keys(j, path,
               {"n_per_class", "dim", "n_sessions", "class_separation",
                "noise_std", "seed", "means_seed", "corpus_name"});
  BenchmarkConfig b;
  b.n_per_class = get_number(j, path, "n_per_class", b.n_per_class);
  b.dim = get_number(j, path, "dim", b.dim);
  b.n_sessions = get_number(j, path, "n_sessions", b.n_sessions);
  b.class_separation =
      get_number(j, path, "class_separation", b.class_separation);
  b.noise_std = get_number(j, path, "noise_std", b.noise_std);
  b.seed = get_number<std::uint64_t>(j, path, "seed", b.seed);
  b.means_seed = get_number<std::uint64_t>(j, path, "means_seed", b.means_seed);
  b.corpus_name = get_string(j, path, "corpus_name", b.corpus_name);
  if (b.n_per_class == 0 || b.dim == 0 || b.n_sessions == 0 ||
      b.class_separation <= 0.0 || b.noise_std <= 0.0) {
    fail(path, "requires positive benchmark parameters");
  }
  return b;
}

inline DataSource parse_data_source(const json& j, const std::string& path) {
  require_keys(j, path, {"path", "benchmark"});
  DataSource d;
  if (j.contains("path")) d.path = get_string(j, path, "path", "");
  if (j.contains("benchmark")) {
    d.benchmark = parse_benchmark(j.at("benchmark"), path + ".benchmark");
  }
  if (d.path.has_value() == d.benchmark.has_value()) {
    fail(path, "must specify exactly one of 'path' or 'benchmark'");
  }
  return d;
}

}  // namespace cfg_detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
  using namespace cfg_detail;
  require_keys(j, "$",
               {"experiment", "output_dir", "seeds", "data", "target_data",
                "model", "train", "classifier", "within_classifiers",
                "baseline_autoencoder", "encoded_dim", "dev_fraction",
                "eval_every", "synthetic_test_on_real"});
  RunConfig cfg;
  cfg.experiment = get_string(j, "$", "experiment", "");
  if (cfg.experiment != "within" && cfg.experiment != "encoded" &&
      cfg.experiment != "cross" && cfg.experiment != "train-only") {
    fail("$.experiment",
         "must be one of 'within', 'encoded', 'cross', 'train-only'");
  }
  cfg.output_dir = get_string(j, "$", "output_dir", cfg.output_dir);

  if (j.contains("seeds")) {
    const auto& s = j.at("seeds");
    if (!s.is_array() || s.empty()) {
      fail("$.seeds", "must be a non-empty array of integers");
    }
    cfg.seeds.clear();
    for (const auto& e : s) {
      if (!e.is_number_unsigned()) fail("$.seeds", "must contain integers");
      cfg.seeds.push_back(e.get<std::uint64_t>());
    }
  }

  if (!j.contains("data")) fail("$.data", "is required");
  cfg.data = parse_data_source(j.at("data"), "$.data");
  if (j.contains("target_data")) {
    cfg.target_data = parse_data_source(j.at("target_data"), "$.target_data");
  }
  if (cfg.experiment == "cross" && !cfg.target_data) {
    fail("$.target_data", "is required for the cross experiment");
  }

  if (j.contains("model")) cfg.model = parse_model(j.at("model"), "$.model");
  if (j.contains("train")) cfg.train = parse_train(j.at("train"), "$.train");
  if (j.contains("classifier")) {
    cfg.classifier =
        parse_classifier(j.at("classifier"), "$.classifier", ClassifierConfig{});
  }
  if (j.contains("within_classifiers")) {
    const auto& w = j.at("within_classifiers");
    require_keys(w, "$.within_classifiers", {"real", "synthetic", "combined"});
    WithinClassifierConfigs defaults;
    if (w.contains("real")) {
      cfg.within_classifiers.real = parse_classifier(
          w.at("real"), "$.within_classifiers.real", defaults.real);
    }
    if (w.contains("synthetic")) {
      cfg.within_classifiers.synthetic =
          parse_classifier(w.at("synthetic"), "$.within_classifiers.synthetic",
                           defaults.synthetic);
    }
    if (w.contains("combined")) {
      cfg.within_classifiers.combined = parse_classifier(
          w.at("combined"), "$.within_classifiers.combined", defaults.combined);
    }
  }
  if (j.contains("baseline_autoencoder")) {
    cfg.baseline_autoencoder = parse_baseline_ae(j.at("baseline_autoencoder"),
                                                 "$.baseline_autoencoder");
  }
  cfg.encoded_dim = get_number(j, "$", "encoded_dim", cfg.encoded_dim);
  if (cfg.encoded_dim == 0) fail("$.encoded_dim", "must be positive");
  cfg.dev_fraction = get_number(j, "$", "dev_fraction", cfg.dev_fraction);
  if (cfg.dev_fraction <= 0.0 || cfg.dev_fraction >= 1.0) {
    fail("$.dev_fraction", "must be in (0,1)");
  }
  cfg.eval_every = get_number(j, "$", "eval_every", cfg.eval_every);
  if (cfg.eval_every == 0) fail("$.eval_every", "must be positive");
  cfg.synthetic_test_on_real =
      get_bool(j, "$", "synthetic_test_on_real", cfg.synthetic_test_on_real);
  return cfg;
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file '" + path.string() + "'");
  }
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw ConfigError("'" + path.string() + "' is not valid JSON");
  }
  return j;
}

inline std::pair<RunConfig, nlohmann::json> load_run_config(
    const std::filesystem::path& path) {
  nlohmann::json j = read_json_file(path);
  return {parse_run_config(j), std::move(j)};
}

/// Materialize the configured data source.
inline FeatureDataset load_data_source(const DataSource& source);

}  // namespace mixgan

#include "mixgan/csv.hpp"

namespace mixgan {

inline FeatureDataset load_data_source(const DataSource& source) {
  if (source.path) return load_feature_csv(*source.path);
  return make_benchmark(*source.benchmark);
}

}  // namespace mixgan
