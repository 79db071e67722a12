// Command-line entry point for benchmark generation, model training,
// synthetic-feature generation, encoding, and the evaluation drivers.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "mixgan/mixgan.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

std::string config_hash(const nlohmann::json& j) {
  const std::string text = j.dump();
  std::uint64_t h = mixgan::kFnvOffset;
  mixgan::hash_bytes(h, text.data(), text.size());
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08x",
                static_cast<unsigned>(h & 0xffffffffu));
  return buf;
}

std::string timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm);
  return buf;
}

/// Run directory: <output_dir>/<experiment>-<confighash>-<timestamp>,
/// unless an explicit directory was requested.
fs::path make_run_dir(const mixgan::RunConfig& cfg, const nlohmann::json& raw,
                      const std::string& override_dir) {
  fs::path dir = override_dir.empty()
                     ? fs::path(cfg.output_dir) /
                           (cfg.experiment + "-" + config_hash(raw) + "-" +
                            timestamp_now())
                     : fs::path(override_dir);
  fs::create_directories(dir);
  return dir;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw mixgan::DataError(mixgan::DataError::Kind::io,
                            "cannot open '" + path.string() + "' for writing");
  }
  out << text;
}

void archive_config(const fs::path& run_dir, const nlohmann::json& raw) {
  write_text_file(run_dir / "config.json", raw.dump(2) + "\n");
}

void refuse_overwrite(const fs::path& path, bool force) {
  if (!force && fs::exists(path)) {
    throw mixgan::DataError(
        mixgan::DataError::Kind::io,
        "'" + path.string() + "' already exists (use --force to overwrite)");
  }
}

// --- benchmark ------------------------------------------------------------

struct BenchmarkArgs {
  mixgan::BenchmarkConfig cfg;
  std::string out = "benchmark.csv";
  bool force = false;
};

int cmd_benchmark(const BenchmarkArgs& args) {
  refuse_overwrite(args.out, args.force);
  const auto data = mixgan::make_benchmark(args.cfg);
  mixgan::save_feature_csv(data, args.out);
  std::printf("wrote %zu rows (%zu features, %zu sessions) to %s\n",
              data.size(), data.dim(), args.cfg.n_sessions, args.out.c_str());
  return kExitOk;
}

// --- train ------------------------------------------------------------

int cmd_train(const std::string& config_path, const std::string& run_dir_arg) {
  auto [cfg, raw] = mixgan::load_run_config(config_path);
  const fs::path run_dir = make_run_dir(cfg, raw, run_dir_arg);

  mixgan::FeatureDataset data = mixgan::load_data_source(cfg.data);
  mixgan::MixGanConfig model_cfg = cfg.model;
  model_cfg.input_dim = data.dim();

  const auto stats = mixgan::fit_normalizer(data, mixgan::NormKind::minmax);
  const auto normalized = mixgan::apply_normalizer(stats, data);

  mixgan::Rng rng(cfg.train.seed);
  mixgan::MixGanModel model = mixgan::build_model(model_cfg, rng);
  mixgan::TrainerState state = mixgan::make_trainer_state(model, cfg.train);
  const mixgan::TrainLog log =
      mixgan::train(model, state, normalized, cfg.train, rng);

  mixgan::ModelCheckpoint checkpoint;
  checkpoint.model = std::move(model);
  checkpoint.trainer = std::move(state);
  checkpoint.epochs_trained = checkpoint.trainer->epochs_trained;
  checkpoint.normalization = stats;
  mixgan::save_checkpoint(checkpoint, run_dir / "checkpoint.mixgan");

  std::ostringstream csv;
  log.write_csv(csv);
  write_text_file(run_dir / "train_log.csv", csv.str());
  archive_config(run_dir, raw);

  if (!log.epochs.empty()) {
    const auto& last = log.epochs.back();
    std::printf("trained %zu epochs; final recon=%.6g disc_acc=%.3f\n",
                log.epochs.size(), last.recon_loss, last.disc_accuracy);
  }
  std::printf("run directory: %s\n", run_dir.string().c_str());
  return kExitOk;
}

// --- generate / encode ------------------------------------------------

int cmd_generate(const std::string& checkpoint_path, const std::string& data_path,
                 const std::string& out, bool force, bool encode_mode) {
  refuse_overwrite(out, force);
  const auto checkpoint = mixgan::load_checkpoint(checkpoint_path);
  mixgan::FeatureDataset data = mixgan::load_feature_csv(data_path);
  if (data.dim() != checkpoint.model.config.input_dim) {
    throw mixgan::DimensionError(
        "data has " + std::to_string(data.dim()) +
        " features but the checkpoint expects " +
        std::to_string(checkpoint.model.config.input_dim));
  }

  mixgan::Matrix2D features = data.features;
  if (checkpoint.normalization) {
    features = mixgan::apply_normalizer(*checkpoint.normalization, features);
  }

  mixgan::FeatureDataset result = data;
  if (encode_mode) {
    result.features = mixgan::encode(checkpoint.model, features);
    for (auto& id : result.ids) id = "enc:" + id;
  } else {
    mixgan::Matrix2D synthetic = mixgan::generate(
        checkpoint.model, mixgan::encode(checkpoint.model, features));
    // Synthetic vectors go back to the scale of the input file.
    if (checkpoint.normalization) {
      synthetic = mixgan::denormalize(*checkpoint.normalization, synthetic);
    }
    result.features = std::move(synthetic);
    for (auto& id : result.ids) id = "syn:" + id;
  }
  mixgan::save_feature_csv(result, out);
  std::printf("wrote %zu rows (%zu features) to %s\n", result.size(),
              result.dim(), out.c_str());
  return kExitOk;
}

// --- evaluate -----------------------------------------------------------

void print_report_summary(const mixgan::EvalReport& report) {
  std::printf("experiment: %s\n", report.experiment.c_str());
  for (const auto& s : report.settings) {
    std::printf("  %-24s UAR %.4f ± %.4f", s.setting.c_str(), s.uar_mean,
                s.uar_std);
    if (!s.published_reference.empty()) {
      std::printf("   (reference: %s)", s.published_reference.c_str());
    }
    std::printf("\n");
    for (const auto& w : s.warnings) {
      std::printf("    warning: %s\n", w.c_str());
    }
  }
}

int cmd_evaluate(const std::string& config_path, const std::string& run_dir_arg) {
  auto [cfg, raw] = mixgan::load_run_config(config_path);
  if (cfg.experiment != "within" && cfg.experiment != "encoded" &&
      cfg.experiment != "cross") {
    throw mixgan::ConfigError(
        "config: field '$.experiment' must be 'within', 'encoded', or "
        "'cross' for evaluate");
  }
  const fs::path run_dir = make_run_dir(cfg, raw, run_dir_arg);
  const mixgan::FeatureDataset data = mixgan::load_data_source(cfg.data);

  mixgan::EvalReport report;
  if (cfg.experiment == "within") {
    mixgan::WithinOptions options;
    options.synthetic_test_on_real = cfg.synthetic_test_on_real;
    report = mixgan::run_within_corpus(data, cfg.model, cfg.train,
                                       cfg.within_classifiers, cfg.seeds,
                                       options);
  } else if (cfg.experiment == "encoded") {
    report = mixgan::run_encoded(data, cfg.encoded_dim, cfg.model, cfg.train,
                                 cfg.baseline_autoencoder, cfg.classifier,
                                 cfg.seeds);
  } else {
    const mixgan::FeatureDataset target =
        mixgan::load_data_source(*cfg.target_data);
    report =
        mixgan::run_cross_corpus(data, target, cfg.model, cfg.train,
                                 cfg.classifier, cfg.seeds, cfg.dev_fraction,
                                 cfg.eval_every);
  }

  write_text_file(run_dir / "report.json",
                  mixgan::report_to_json(report).dump(2) + "\n");
  std::ostringstream flat;
  mixgan::write_report_csv(report, flat);
  write_text_file(run_dir / "report.csv", flat.str());
  for (const auto& s : report.settings) {
    std::ostringstream cm;
    mixgan::write_confusion_csv(s.aggregated_confusion, cm);
    write_text_file(run_dir / ("confusion_" + s.setting + ".csv"), cm.str());
  }
  archive_config(run_dir, raw);

  print_report_summary(report);
  std::printf("run directory: %s\n", run_dir.string().c_str());
  return kExitOk;
}

// --- report ------------------------------------------------------------

int cmd_report(const std::string& report_path, bool show_confusion) {
  const nlohmann::json j = mixgan::read_json_file(report_path);
  std::printf("experiment: %s\n",
              j.value("experiment", std::string("?")).c_str());
  if (!j.contains("settings") || !j.at("settings").is_object()) {
    throw mixgan::DataError(mixgan::DataError::Kind::invalid,
                            "report has no settings object");
  }
  for (const auto& [name, s] : j.at("settings").items()) {
    std::printf("  %-24s UAR %.4f ± %.4f", name.c_str(),
                s.value("uar_mean", 0.0), s.value("uar_std", 0.0));
    if (s.contains("published_reference")) {
      std::printf("   (reference: %s)",
                  s.at("published_reference").get<std::string>().c_str());
    }
    std::printf("\n");
    if (s.contains("warnings")) {
      for (const auto& w : s.at("warnings")) {
        std::printf("    warning: %s\n", w.get<std::string>().c_str());
      }
    }
    if (show_confusion && s.contains("confusion")) {
      for (std::size_t i = 0; i < mixgan::kNumClasses; ++i) {
        std::printf("    %-8s", std::string(mixgan::kClassNames[i]).c_str());
        for (const auto& c : s.at("confusion").at(i)) {
          std::printf(" %8llu",
                      static_cast<unsigned long long>(c.get<std::uint64_t>()));
        }
        std::printf("\n");
      }
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixup-augmented adversarial autoencoder for feature "
               "learning and synthetic feature generation"};
  app.require_subcommand(1);

  BenchmarkArgs bench;
  auto* sub_bench = app.add_subcommand(
      "benchmark", "Generate a synthetic 4-class benchmark feature CSV");
  sub_bench->add_option("--out", bench.out, "Output CSV path");
  sub_bench->add_option("--n-per-class", bench.cfg.n_per_class,
                        "Samples per class");
  sub_bench->add_option("--dim", bench.cfg.dim, "Feature dimension");
  sub_bench->add_option("--sessions", bench.cfg.n_sessions,
                        "Number of sessions");
  sub_bench->add_option("--separation", bench.cfg.class_separation,
                        "Minimum distance between class centroids");
  sub_bench->add_option("--noise-std", bench.cfg.noise_std,
                        "Within-class noise standard deviation");
  sub_bench->add_option("--seed", bench.cfg.seed, "Sampling seed");
  sub_bench->add_option("--means-seed", bench.cfg.means_seed,
                        "Seed for class means (0 = derive from --seed); share "
                        "it across corpora for cross-corpus runs");
  sub_bench->add_option("--corpus", bench.cfg.corpus_name, "Corpus name tag");
  sub_bench->add_flag("--force", bench.force, "Overwrite an existing file");

  std::string config_path, run_dir;
  auto* sub_train = app.add_subcommand(
      "train", "Train the model on the configured data; writes a checkpoint "
               "and a training log");
  sub_train->add_option("--config", config_path, "Run config JSON")->required();
  sub_train->add_option("--run-dir", run_dir,
                        "Output directory (default: derived from config hash "
                        "and timestamp)");

  std::string ckpt_path, data_path, out_path;
  bool force = false;
  auto* sub_generate = app.add_subcommand(
      "generate", "Write synthetic counterparts of the given feature CSV");
  sub_generate->add_option("--checkpoint", ckpt_path, "Model checkpoint")
      ->required();
  sub_generate->add_option("--data", data_path, "Input feature CSV")
      ->required();
  sub_generate->add_option("--out", out_path, "Output CSV")->required();
  sub_generate->add_flag("--force", force, "Overwrite an existing file");

  auto* sub_encode = app.add_subcommand(
      "encode", "Write encoded (latent) features for the given feature CSV");
  sub_encode->add_option("--checkpoint", ckpt_path, "Model checkpoint")
      ->required();
  sub_encode->add_option("--data", data_path, "Input feature CSV")->required();
  sub_encode->add_option("--out", out_path, "Output CSV")->required();
  sub_encode->add_flag("--force", force, "Overwrite an existing file");

  auto* sub_evaluate = app.add_subcommand(
      "evaluate", "Run the configured experiment and write the report");
  sub_evaluate->add_option("--config", config_path, "Run config JSON")
      ->required();
  sub_evaluate->add_option("--run-dir", run_dir, "Output directory");

  std::string report_path;
  bool show_confusion = false;
  auto* sub_report =
      app.add_subcommand("report", "Pretty-print an existing report.json");
  sub_report->add_option("--report", report_path, "Path to report.json")
      ->required();
  sub_report->add_flag("--confusion", show_confusion,
                       "Also print confusion matrices");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (sub_bench->parsed()) return cmd_benchmark(bench);
    if (sub_train->parsed()) return cmd_train(config_path, run_dir);
    if (sub_generate->parsed()) {
      return cmd_generate(ckpt_path, data_path, out_path, force, false);
    }
    if (sub_encode->parsed()) {
      return cmd_generate(ckpt_path, data_path, out_path, force, true);
    }
    if (sub_evaluate->parsed()) return cmd_evaluate(config_path, run_dir);
    if (sub_report->parsed()) return cmd_report(report_path, show_confusion);
  } catch (const mixgan::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const mixgan::NumericalError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  } catch (const mixgan::Error& e) {
    // Data, checkpoint, and dimension problems all stem from inputs.
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
  return kExitOk;
}
