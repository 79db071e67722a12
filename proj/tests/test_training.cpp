#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "mixgan/training.hpp"
#include "support/test_helpers.hpp"

using namespace mixgan;
using testing_support::gradient_rel_error;

namespace {

MixGanConfig toy_config(std::size_t input_dim = 6, double dropout = 0.0) {
  MixGanConfig cfg;
  cfg.input_dim = input_dim;
  cfg.latent_dim = 2;
  cfg.encoder_hidden = {5, 4};
  cfg.discriminator_hidden = {5, 5};
  cfg.dropout_rate = dropout;
  return cfg;
}

FeatureDataset toy_benchmark(std::size_t dim, std::size_t n_per_class,
                             std::uint64_t seed = 1,
                             std::size_t sessions = 2) {
  BenchmarkConfig cfg;
  cfg.n_per_class = n_per_class;
  cfg.dim = dim;
  cfg.n_sessions = sessions;
  cfg.seed = seed;
  return cfg.n_per_class > 0 ? make_benchmark(cfg) : FeatureDataset{};
}

FeatureDataset normalized(const FeatureDataset& data) {
  return apply_normalizer(fit_normalizer(data, NormKind::minmax), data);
}

MixedBatch make_batch(const FeatureDataset& data, std::size_t size,
                      double real_fraction, std::uint64_t seed) {
  MixupConfig mix;
  mix.real_fraction = real_fraction;
  Rng rng(seed);
  return make_mixed_batch(data, size, mix, rng);
}

std::vector<double> concat_params(const nn::Mlp& a, const nn::Mlp& b) {
  auto va = nn::param_vector(a);
  const auto vb = nn::param_vector(b);
  va.insert(va.end(), vb.begin(), vb.end());
  return va;
}

std::vector<double> flatten_grads(const nn::MlpGradients& g) {
  std::vector<double> out;
  for (std::size_t i = 0; i < g.weights.size(); ++i) {
    out.insert(out.end(), g.weights[i].values.begin(),
               g.weights[i].values.end());
    out.insert(out.end(), g.bias[i].begin(), g.bias[i].end());
  }
  return out;
}

}  // namespace

TEST_CASE("phase gradients match finite differences of each phase's loss") {
  const FeatureDataset data = normalized(toy_benchmark(6, 6));
  Rng rng(3);
  MixGanModel model = build_model(toy_config(), rng);
  const MixedBatch batch = make_batch(data, 8, 0.5, 11);

  SECTION("phase 1: reconstruction over encoder+generator") {
    Rng r(0);
    const auto result = compute_autoencoder_phase(model, batch.x_tilde, true, r);
    auto analytic = flatten_grads(result.encoder_grads);
    const auto gen_part = flatten_grads(result.generator_grads);
    analytic.insert(analytic.end(), gen_part.begin(), gen_part.end());

    MixGanModel scratch = model;
    const std::size_t n_enc = nn::param_count(model.encoder);
    const auto loss_fn = [&](std::span<const double> p) {
      nn::set_param_vector(scratch.encoder, p.subspan(0, n_enc));
      nn::set_param_vector(scratch.generator, p.subspan(n_enc));
      Rng r2(0);
      return compute_autoencoder_phase(scratch, batch.x_tilde, true, r2).loss;
    };
    const auto params = concat_params(model.encoder, model.generator);
    const auto numeric = nn::finite_diff_gradient(loss_fn, params, 1e-4);
    CHECK(gradient_rel_error(analytic, numeric) < 1e-3);
  }

  SECTION("phase 2: adversarial loss over generator only") {
    Rng r(0);
    const auto result = compute_generator_phase(model, batch.x_tilde, true, r);
    const auto analytic = flatten_grads(result.generator_grads);

    MixGanModel scratch = model;
    const auto loss_fn = [&](std::span<const double> p) {
      nn::set_param_vector(scratch.generator, p);
      Rng r2(0);
      return compute_generator_phase(scratch, batch.x_tilde, true, r2).loss;
    };
    const auto numeric = nn::finite_diff_gradient(
        loss_fn, nn::param_vector(model.generator), 1e-4);
    CHECK(gradient_rel_error(analytic, numeric) < 1e-3);
  }

  SECTION("phase 3: discriminator BCE on real rows vs their fakes") {
    std::vector<std::size_t> real_rows;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (batch.is_real[i]) real_rows.push_back(i);
    }
    REQUIRE(!real_rows.empty());
    const Matrix2D x_real = take_rows(batch.x_tilde, real_rows);

    Rng r(0);
    const auto result = compute_discriminator_phase(model, x_real, true, r);
    const auto analytic = flatten_grads(result.discriminator_grads);

    MixGanModel scratch = model;
    const auto loss_fn = [&](std::span<const double> p) {
      nn::set_param_vector(scratch.discriminator, p);
      Rng r2(0);
      return compute_discriminator_phase(scratch, x_real, true, r2).loss;
    };
    const auto numeric = nn::finite_diff_gradient(
        loss_fn, nn::param_vector(model.discriminator), 1e-4);
    CHECK(gradient_rel_error(analytic, numeric) < 1e-3);
  }
}

TEST_CASE("train_step: all-mixed batch leaves the discriminator untouched") {
  const FeatureDataset data = normalized(toy_benchmark(6, 6));
  Rng rng(5);
  MixGanModel model = build_model(toy_config(), rng);
  TrainConfig tc;
  TrainerState state = make_trainer_state(model, tc);

  MixedBatch batch = make_batch(data, 8, 0.0, 13);
  for (bool real : batch.is_real) REQUIRE(!real);

  const auto disc_before = nn::param_vector(model.discriminator);
  Rng step_rng(1);
  const StepLosses losses = train_step(model, batch, tc, state, step_rng);
  CHECK(losses.disc_skipped);
  CHECK(nn::param_vector(model.discriminator) == disc_before);
  CHECK(state.discriminator.step_count == 0);
}

TEST_CASE("phase isolation: each phase updates exactly its own parameters") {
  const FeatureDataset data = normalized(toy_benchmark(6, 6));
  Rng rng(7);
  MixGanModel model = build_model(toy_config(6, 0.5), rng);
  TrainConfig tc;
  TrainerState state = make_trainer_state(model, tc);
  const MixedBatch batch = make_batch(data, 10, 0.6, 17);
  Rng step_rng(2);

  // Phase 1.
  const auto disc_0 = nn::param_vector(model.discriminator);
  auto ae = compute_autoencoder_phase(model, batch.x_tilde, true, step_rng);
  nn::adam_step(model.encoder, ae.encoder_grads, state.ae_encoder);
  nn::adam_step(model.generator, ae.generator_grads, state.ae_generator);
  CHECK(nn::param_vector(model.discriminator) == disc_0);

  // Phase 2 changes the generator but not the encoder or discriminator.
  const auto enc_1 = nn::param_vector(model.encoder);
  const auto gen_1 = nn::param_vector(model.generator);
  auto gen = compute_generator_phase(model, batch.x_tilde, true, step_rng);
  nn::adam_step(model.generator, gen.generator_grads, state.adv_generator);
  CHECK(nn::param_vector(model.encoder) == enc_1);
  CHECK(nn::param_vector(model.discriminator) == disc_0);
  CHECK(nn::param_vector(model.generator) != gen_1);

  // Phase 3 touches only the discriminator.
  const auto enc_2 = nn::param_vector(model.encoder);
  const auto gen_2 = nn::param_vector(model.generator);
  std::vector<std::size_t> real_rows;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch.is_real[i]) real_rows.push_back(i);
  }
  REQUIRE(!real_rows.empty());
  auto disc = compute_discriminator_phase(
      model, take_rows(batch.x_tilde, real_rows), true, step_rng);
  nn::adam_step(model.discriminator, disc.discriminator_grads,
                state.discriminator);
  CHECK(nn::param_vector(model.encoder) == enc_2);
  CHECK(nn::param_vector(model.generator) == gen_2);
  CHECK(nn::param_vector(model.discriminator) != disc_0);
}

TEST_CASE("phase 2 step at tiny lr strictly decreases its own loss") {
  const FeatureDataset data = normalized(toy_benchmark(6, 6));
  Rng rng(9);
  MixGanModel model = build_model(toy_config(), rng);
  TrainConfig tc;
  tc.lr_generator = 1e-6;
  TrainerState state = make_trainer_state(model, tc);
  const MixedBatch batch = make_batch(data, 12, 0.5, 19);

  Rng r(0);
  const auto before = compute_generator_phase(model, batch.x_tilde, true, r);
  nn::adam_step(model.generator, before.generator_grads, state.adv_generator);
  Rng r2(0);
  const auto after = compute_generator_phase(model, batch.x_tilde, true, r2);
  CHECK(after.loss < before.loss);
}

TEST_CASE("pretrain: zero epochs leaves the model unchanged") {
  const FeatureDataset data = normalized(toy_benchmark(6, 6));
  Rng rng(11);
  MixGanModel model = build_model(toy_config(), rng);
  const auto before = concat_params(model.encoder, model.generator);
  TrainConfig tc;
  tc.pretrain_epochs = 0;
  Rng train_rng(1);
  const TrainLog log = pretrain_autoencoder(model, data, tc, train_rng);
  CHECK(log.epochs.empty());
  CHECK(concat_params(model.encoder, model.generator) == before);
}

TEST_CASE("pretrain: reconstruction improves on a small benchmark") {
  const FeatureDataset data = normalized(toy_benchmark(8, 20, 2));
  MixGanConfig cfg = toy_config(8, 0.5);
  cfg.encoder_hidden = {16, 8};
  Rng rng(13);
  MixGanModel model = build_model(cfg, rng);
  TrainConfig tc;
  tc.pretrain_epochs = 40;
  tc.epochs = 0;
  tc.batch_size = 16;
  tc.lr_autoencoder = 1e-3;
  Rng train_rng(2);
  TrainerState state = make_trainer_state(model, tc);
  const TrainLog log =
      pretrain_autoencoder(model, state, data, tc, train_rng);
  REQUIRE(log.epochs.size() == 40);
  CHECK(log.epochs.back().recon_loss < 0.5 * log.epochs.front().recon_loss);
  for (const auto& e : log.epochs) CHECK(e.phase == "pretrain");
}

TEST_CASE("train: deterministic per seed, log covers both stages") {
  const FeatureDataset data = normalized(toy_benchmark(6, 8));
  const auto run = [&] {
    Rng rng(21);
    MixGanModel model = build_model(toy_config(6, 0.5), rng);
    TrainConfig tc;
    tc.pretrain_epochs = 3;
    tc.epochs = 4;
    tc.batch_size = 8;
    Rng train_rng(3);
    const TrainLog log = train(model, data, tc, train_rng);
    return std::pair{concat_params(model.encoder, model.generator),
                     log.epochs.size()};
  };
  const auto [params1, n1] = run();
  const auto [params2, n2] = run();
  CHECK(params1 == params2);
  CHECK(n1 == 7);
}

TEST_CASE("train: non-finite loss aborts with diagnostics") {
  const FeatureDataset data = normalized(toy_benchmark(6, 6));
  Rng rng(23);
  MixGanModel model = build_model(toy_config(), rng);
  model.encoder.layers[0].weights(0, 0) =
      std::numeric_limits<double>::quiet_NaN();
  TrainConfig tc;
  tc.pretrain_epochs = 1;
  tc.epochs = 0;
  tc.batch_size = 8;
  Rng train_rng(4);
  try {
    train(model, data, tc, train_rng);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("epoch") != std::string::npos);
    CHECK(msg.find("batch") != std::string::npos);
  }
}

TEST_CASE("train log CSV has the documented columns") {
  const FeatureDataset data = normalized(toy_benchmark(6, 6));
  Rng rng(25);
  MixGanModel model = build_model(toy_config(), rng);
  TrainConfig tc;
  tc.pretrain_epochs = 1;
  tc.epochs = 1;
  tc.batch_size = 8;
  Rng train_rng(5);
  const TrainLog log = train(model, data, tc, train_rng);
  std::ostringstream out;
  log.write_csv(out);
  const std::string csv = out.str();
  CHECK(csv.find("epoch,phase,recon_loss,gen_loss,disc_loss,disc_accuracy,"
                 "disc_skipped_batches\n") == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + 2 epochs
}

TEST_CASE("generate_synthetic_dataset preserves metadata and labels") {
  const FeatureDataset data = normalized(toy_benchmark(6, 6));
  Rng rng(27);
  MixGanModel model = build_model(toy_config(), rng);
  const FeatureDataset syn = generate_synthetic_dataset(model, data);
  REQUIRE(syn.size() == data.size());
  REQUIRE(syn.dim() == data.dim());
  CHECK(syn.labels == data.labels);
  CHECK(syn.sessions == data.sessions);
  CHECK(syn.speakers == data.speakers);
  CHECK(syn.one_hot.values == data.one_hot.values);
  CHECK(syn.ids[0] == "syn:" + data.ids[0]);
  CHECK(syn.features.values != data.features.values);
}

TEST_CASE("after brief training the discriminator separates real from fake") {
  const FeatureDataset data = normalized(toy_benchmark(8, 20, 4));
  MixGanConfig cfg = toy_config(8, 0.5);
  cfg.encoder_hidden = {16, 8};
  cfg.discriminator_hidden = {16, 16};
  Rng rng(29);
  MixGanModel model = build_model(cfg, rng);
  TrainConfig tc;
  tc.pretrain_epochs = 20;
  tc.epochs = 20;
  tc.batch_size = 16;
  tc.lr_autoencoder = 1e-3;
  tc.lr_generator = 1e-4;
  tc.lr_discriminator = 1e-3;
  Rng train_rng(6);
  train(model, data, tc, train_rng);

  const Matrix2D fakes = generate(model, encode(model, data.features));
  const auto p_real = discriminate(model, data.features);
  const auto p_fake = discriminate(model, fakes);
  double mean_real = 0.0, mean_fake = 0.0;
  for (double p : p_real) mean_real += p / p_real.size();
  for (double p : p_fake) mean_fake += p / p_fake.size();
  CHECK(mean_real - mean_fake > 0.0);
}
