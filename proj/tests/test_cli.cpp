#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mixgan/csv.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kWorkDir = fs::temp_directory_path() / "mixgan_cli_tests";

struct CliResult {
  int exit_code;
  std::string output;  // stdout + stderr
};

CliResult run_cli(const std::string& args) {
  fs::create_directories(kWorkDir);
  const fs::path log = kWorkDir / "cli_output.txt";
  const std::string cmd =
      std::string(MIXGAN_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream buf;
  buf << in.rdbuf();
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return {code, buf.str()};
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

nlohmann::json tiny_train_config(const std::string& csv_path) {
  return {
      {"experiment", "train-only"},
      {"data", {{"path", csv_path}}},
      {"model",
       {{"latent_dim", 2},
        {"encoder_hidden", {12, 6}},
        {"discriminator_hidden", {12, 12}}}},
      {"train",
       {{"pretrain_epochs", 2},
        {"epochs", 2},
        {"batch_size", 16},
        {"seed", 7}}},
  };
}

}  // namespace

TEST_CASE("cli: benchmark writes a loadable CSV and refuses overwrite") {
  fs::create_directories(kWorkDir);
  const fs::path csv = kWorkDir / "bench.csv";
  fs::remove(csv);

  auto r = run_cli("benchmark --out " + csv.string() +
                   " --n-per-class 8 --dim 6 --sessions 2 --seed 3");
  REQUIRE(r.exit_code == 0);
  const auto data = mixgan::load_feature_csv(csv);
  CHECK(data.size() == 32);
  CHECK(data.dim() == 6);

  // Refusal without --force, success with it.
  r = run_cli("benchmark --out " + csv.string() + " --n-per-class 8 --dim 6");
  CHECK(r.exit_code == 3);
  CHECK(r.output.find("--force") != std::string::npos);
  r = run_cli("benchmark --out " + csv.string() +
              " --n-per-class 8 --dim 6 --force");
  CHECK(r.exit_code == 0);
}

TEST_CASE("cli: benchmark determinism") {
  const fs::path a = kWorkDir / "bench_a.csv";
  const fs::path b = kWorkDir / "bench_b.csv";
  fs::remove(a);
  fs::remove(b);
  REQUIRE(run_cli("benchmark --out " + a.string() +
                  " --n-per-class 5 --dim 4 --seed 11").exit_code == 0);
  REQUIRE(run_cli("benchmark --out " + b.string() +
                  " --n-per-class 5 --dim 4 --seed 11").exit_code == 0);
  CHECK(read_file(a) == read_file(b));
}

TEST_CASE("cli: train produces a byte-identical checkpoint on rerun") {
  const fs::path csv = kWorkDir / "train_data.csv";
  fs::remove(csv);
  REQUIRE(run_cli("benchmark --out " + csv.string() +
                  " --n-per-class 8 --dim 6 --sessions 2 --seed 5").exit_code ==
          0);

  const fs::path cfg_path = kWorkDir / "train_cfg.json";
  write_file(cfg_path, tiny_train_config(csv.string()).dump(2));

  const fs::path run1 = kWorkDir / "run1";
  const fs::path run2 = kWorkDir / "run2";
  fs::remove_all(run1);
  fs::remove_all(run2);

  auto r = run_cli("train --config " + cfg_path.string() + " --run-dir " +
                   run1.string());
  REQUIRE(r.exit_code == 0);
  REQUIRE(fs::exists(run1 / "checkpoint.mixgan"));
  REQUIRE(fs::exists(run1 / "train_log.csv"));
  REQUIRE(fs::exists(run1 / "config.json"));

  r = run_cli("train --config " + cfg_path.string() + " --run-dir " +
              run2.string());
  REQUIRE(r.exit_code == 0);
  CHECK(read_file(run1 / "checkpoint.mixgan") ==
        read_file(run2 / "checkpoint.mixgan"));
  CHECK(read_file(run1 / "train_log.csv") == read_file(run2 / "train_log.csv"));
}

TEST_CASE("cli: config errors name the offending field and exit 2") {
  const fs::path cfg_path = kWorkDir / "bad_cfg.json";

  // Missing data section.
  write_file(cfg_path, R"({"experiment": "train-only"})");
  auto r = run_cli("train --config " + cfg_path.string());
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("$.data") != std::string::npos);

  // Unknown field.
  write_file(cfg_path,
             R"({"experiment": "train-only", "data": {"path": "x.csv"}, "typo_field": 1})");
  r = run_cli("train --config " + cfg_path.string());
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("typo_field") != std::string::npos);

  // Invalid JSON.
  write_file(cfg_path, "{not json");
  r = run_cli("train --config " + cfg_path.string());
  CHECK(r.exit_code == 2);

  // Missing file is a data error.
  write_file(cfg_path, tiny_train_config("/definitely/not/there.csv").dump());
  r = run_cli("train --config " + cfg_path.string());
  CHECK(r.exit_code == 3);
}

TEST_CASE("cli: generate and encode round robin") {
  const fs::path csv = kWorkDir / "gen_data.csv";
  const fs::path cfg_path = kWorkDir / "gen_cfg.json";
  const fs::path run_dir = kWorkDir / "gen_run";
  fs::remove(csv);
  fs::remove_all(run_dir);
  REQUIRE(run_cli("benchmark --out " + csv.string() +
                  " --n-per-class 8 --dim 6 --sessions 2 --seed 6").exit_code ==
          0);
  write_file(cfg_path, tiny_train_config(csv.string()).dump());
  REQUIRE(run_cli("train --config " + cfg_path.string() + " --run-dir " +
                  run_dir.string()).exit_code == 0);
  const std::string ckpt = (run_dir / "checkpoint.mixgan").string();

  const fs::path syn_csv = kWorkDir / "syn.csv";
  fs::remove(syn_csv);
  auto r = run_cli("generate --checkpoint " + ckpt + " --data " + csv.string() +
                   " --out " + syn_csv.string());
  REQUIRE(r.exit_code == 0);
  const auto orig = mixgan::load_feature_csv(csv);
  const auto syn = mixgan::load_feature_csv(syn_csv);
  CHECK(syn.size() == orig.size());
  CHECK(syn.dim() == orig.dim());
  CHECK(syn.labels == orig.labels);
  CHECK(syn.ids[0] == "syn:" + orig.ids[0]);

  const fs::path enc_csv = kWorkDir / "enc.csv";
  fs::remove(enc_csv);
  r = run_cli("encode --checkpoint " + ckpt + " --data " + csv.string() +
              " --out " + enc_csv.string());
  REQUIRE(r.exit_code == 0);
  const auto codes = mixgan::load_feature_csv(enc_csv);
  CHECK(codes.size() == orig.size());
  CHECK(codes.dim() == 2);
  CHECK(codes.labels == orig.labels);

  // Feeding 2-d codes to a 6-d model is a dimension (data) error.
  r = run_cli("generate --checkpoint " + ckpt + " --data " + enc_csv.string() +
              " --out " + (kWorkDir / "bad.csv").string() + " --force");
  CHECK(r.exit_code == 3);
}

TEST_CASE("cli: evaluate writes a complete report bundle") {
  const fs::path csv = kWorkDir / "eval_data.csv";
  fs::remove(csv);
  REQUIRE(run_cli("benchmark --out " + csv.string() +
                  " --n-per-class 10 --dim 6 --sessions 2 --seed 8 "
                  "--separation 8").exit_code == 0);

  nlohmann::json cfg = {
      {"experiment", "within"},
      {"seeds", {1, 2}},
      {"data", {{"path", csv.string()}}},
      {"model",
       {{"latent_dim", 2},
        {"encoder_hidden", {12, 6}},
        {"discriminator_hidden", {12, 12}}}},
      {"train",
       {{"pretrain_epochs", 2}, {"epochs", 2}, {"batch_size", 16}}},
      {"within_classifiers",
       {{"real", {{"hidden_units", 16}, {"epochs", 5}, {"learning_rate", 1e-3}}},
        {"synthetic",
         {{"hidden_units", 16}, {"epochs", 5}, {"learning_rate", 1e-3}}},
        {"combined",
         {{"hidden_units", 16}, {"epochs", 5}, {"learning_rate", 1e-3}}}}},
  };
  const fs::path cfg_path = kWorkDir / "eval_cfg.json";
  write_file(cfg_path, cfg.dump(2));

  const fs::path run_dir = kWorkDir / "eval_run";
  fs::remove_all(run_dir);
  auto r = run_cli("evaluate --config " + cfg_path.string() + " --run-dir " +
                   run_dir.string());
  REQUIRE(r.exit_code == 0);
  REQUIRE(fs::exists(run_dir / "report.json"));
  REQUIRE(fs::exists(run_dir / "report.csv"));
  REQUIRE(fs::exists(run_dir / "confusion_real.csv"));
  REQUIRE(fs::exists(run_dir / "confusion_synthetic.csv"));
  REQUIRE(fs::exists(run_dir / "confusion_real_plus_synthetic.csv"));
  REQUIRE(fs::exists(run_dir / "config.json"));

  // The report parses and has per-seed entries for both seeds.
  const auto report =
      nlohmann::json::parse(read_file(run_dir / "report.json"));
  CHECK(report.at("experiment") == "within");
  CHECK(report.at("settings").at("real").at("per_seed").size() == 2);

  // report command renders it.
  r = run_cli("report --report " + (run_dir / "report.json").string() +
              " --confusion");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("real_plus_synthetic") != std::string::npos);
  CHECK(r.output.find("reference") != std::string::npos);
}

TEST_CASE("cli: unknown subcommand and missing required options exit 2") {
  CHECK(run_cli("frobnicate").exit_code == 2);
  CHECK(run_cli("train").exit_code == 2);
  CHECK(run_cli("--help").exit_code == 0);
}
