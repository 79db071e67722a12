#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mixgan/eval.hpp"
#include "support/test_helpers.hpp"

using namespace mixgan;
using testing_support::random_matrix;

TEST_CASE("confusion: hand-enumerated example and totals") {
  const std::vector<int> truth{0, 0, 1};
  const std::vector<int> preds{0, 1, 1};
  const ConfusionMatrix cm = confusion(truth, preds);
  CHECK(cm.counts[0][0] == 1);
  CHECK(cm.counts[0][1] == 1);
  CHECK(cm.counts[1][1] == 1);
  CHECK(cm.total() == 3);

  const std::vector<int> perfect{0, 1, 2, 3, 2};
  const ConfusionMatrix diag = confusion(perfect, perfect);
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    for (std::size_t j = 0; j < kNumClasses; ++j) {
      if (i != j) CHECK(diag.counts[i][j] == 0);
    }
  }
  CHECK(uar(diag) == 1.0);

  const std::vector<int> shorter{0};
  CHECK_THROWS_AS(confusion(truth, shorter), DimensionError);
}

TEST_CASE("uar: two-class worked example") {
  // counts [[1,1],[0,2]] -> recalls 0.5 and 1.0 -> UAR 0.75... with the two
  // empty classes excluded from the mean.
  ConfusionMatrix cm;
  cm.counts[0][0] = 1;
  cm.counts[0][1] = 1;
  cm.counts[1][1] = 2;
  CHECK(uar(cm) == Catch::Approx(0.75).margin(1e-15));
  CHECK(absent_classes(cm) == std::vector<std::size_t>{2, 3});
}

TEST_CASE("uar: random predictions on balanced classes sit near chance") {
  Rng rng(3);
  const int n = 10000;
  std::vector<int> truth(n), preds(n);
  for (int i = 0; i < n; ++i) {
    truth[i] = static_cast<int>(rng.uniform_int(4));
    preds[i] = static_cast<int>(rng.uniform_int(4));
  }
  CHECK(uar(confusion(truth, preds)) == Catch::Approx(0.25).margin(0.03));
}

TEST_CASE("uar: equals brute-force recall averaging on random labelings") {
  Rng rng(5);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 5 + rng.uniform_int(60);
    std::vector<int> truth(n), preds(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = static_cast<int>(rng.uniform_int(4));
      preds[i] = static_cast<int>(rng.uniform_int(4));
    }
    // Brute force directly from the pairs.
    double sum = 0.0;
    int present = 0;
    for (int cls = 0; cls < 4; ++cls) {
      int total = 0, hit = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (truth[i] == cls) {
          ++total;
          if (preds[i] == cls) ++hit;
        }
      }
      if (total > 0) {
        sum += static_cast<double>(hit) / total;
        ++present;
      }
    }
    const double expected = sum / present;
    CHECK(std::abs(uar(confusion(truth, preds)) - expected) < 1e-12);
  }
}

TEST_CASE("uar: invariant to duplicating one class's test samples") {
  Rng rng(7);
  std::vector<int> truth, preds;
  for (int i = 0; i < 40; ++i) {
    truth.push_back(static_cast<int>(rng.uniform_int(4)));
    preds.push_back(static_cast<int>(rng.uniform_int(4)));
  }
  const double base = uar(confusion(truth, preds));

  std::vector<int> truth2 = truth, preds2 = preds;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == 2) {  // duplicate every 'neutral' sample
      truth2.push_back(truth[i]);
      preds2.push_back(preds[i]);
    }
  }
  CHECK(uar(confusion(truth2, preds2)) == Catch::Approx(base).margin(1e-12));
}

TEST_CASE("classifier: loss halves and seeds reproduce exactly") {
  BenchmarkConfig bc;
  bc.n_per_class = 30;
  bc.dim = 10;
  bc.seed = 3;
  const FeatureDataset raw = make_benchmark(bc);
  const FeatureDataset data =
      apply_normalizer(fit_normalizer(raw, NormKind::minmax), raw);

  ClassifierConfig cfg;
  cfg.hidden_units = 32;
  cfg.epochs = 60;
  cfg.batch_size = 32;
  cfg.learning_rate = 1e-3;

  const auto train_loss = [&](const nn::Mlp& clf) {
    Rng r(0);
    const Matrix2D logits = nn::forward(clf, data.features, false, r).first;
    return nn::softmax_ce_loss(logits, data.one_hot).first;
  };

  Rng init_rng(9);
  const nn::Mlp untrained = make_classifier(data.dim(), cfg, init_rng);
  Rng rng(9);
  const nn::Mlp clf = train_classifier(data, cfg, rng);
  CHECK(train_loss(clf) < 0.5 * train_loss(untrained));

  Rng rng2(9);
  const nn::Mlp clf2 = train_classifier(data, cfg, rng2);
  CHECK(nn::param_vector(clf) == nn::param_vector(clf2));
}

TEST_CASE("classifier: single-class training predicts that class always") {
  Rng data_rng(11);
  const Matrix2D features = random_matrix(data_rng, 24, 6, 0.0, 1.0);
  std::vector<int> labels(24, 2);
  const Matrix2D targets = one_hot_from_labels(labels);

  ClassifierConfig cfg;
  cfg.hidden_units = 16;
  cfg.epochs = 40;
  cfg.batch_size = 8;
  cfg.learning_rate = 1e-3;
  Rng rng(13);
  const nn::Mlp clf = train_classifier(features, targets, cfg, rng);
  const Matrix2D probe = random_matrix(data_rng, 10, 6, 0.0, 1.0);
  for (int p : predict(clf, probe)) CHECK(p == 2);
}

TEST_CASE("finalize_setting: seed aggregation and empty-class warnings") {
  SettingResult s;
  s.setting = "demo";
  s.runs = {{1, "a", 0.8}, {1, "b", 0.6}, {2, "a", 0.9}, {2, "b", 0.7}};
  s.aggregated_confusion.counts[0][0] = 5;
  s.aggregated_confusion.counts[1][1] = 4;
  s.aggregated_confusion.counts[2][2] = 3;
  // class 3 never appears -> warning expected
  finalize_setting(s);

  REQUIRE(s.per_seed_uar.size() == 2);
  CHECK(s.per_seed_uar[0].second == Catch::Approx(0.7));
  CHECK(s.per_seed_uar[1].second == Catch::Approx(0.8));
  CHECK(s.uar_mean == Catch::Approx(0.75));
  CHECK(s.uar_std == Catch::Approx(0.05));
  REQUIRE(s.warnings.size() == 1);
  CHECK(s.warnings[0].find("sad") != std::string::npos);
}

TEST_CASE("report serialization has the documented shape") {
  EvalReport report;
  report.experiment = "within";
  report.trained_param_hash = "00ff";
  SettingResult s;
  s.setting = "real";
  s.published_reference = "60.51±0.57";
  s.runs = {{1, "Ses01", 0.5}};
  s.aggregated_confusion.counts[0][0] = 1;
  finalize_setting(s);
  report.settings.push_back(s);

  const nlohmann::json j = report_to_json(report);
  CHECK(j.at("schema_version") == 1);
  CHECK(j.at("experiment") == "within");
  CHECK(j.at("classes").size() == 4);
  const auto& js = j.at("settings").at("real");
  CHECK(js.at("uar_mean") == 0.5);
  CHECK(js.at("runs").size() == 1);
  CHECK(js.at("confusion").size() == 4);
  CHECK(js.at("published_reference") == "60.51±0.57");

  std::ostringstream csv;
  write_report_csv(report, csv);
  CHECK(csv.str().find("experiment,setting,seed,fold,uar\n") == 0);
  CHECK(csv.str().find("within,real,1,Ses01,0.5\n") != std::string::npos);

  std::ostringstream cm;
  write_confusion_csv(s.aggregated_confusion, cm);
  CHECK(cm.str().find("true\\predicted,angry,happy,neutral,sad\n") == 0);
}
