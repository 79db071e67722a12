#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mixgan/core/error.hpp"
#include "mixgan/data.hpp"
#include "mixgan/model.hpp"
#include "mixgan/training.hpp"

namespace mixgan {

// Checkpoint container (see docs/checkpoint_format.md):
//   magic "MIXGAN" | u32 version | u64 json_len + config JSON |
//   u64 epochs_trained | parameter blocks (encoder, generator,
//   discriminator) | u8 has_optimizer | 4 Adam blocks.
// All integers little-endian, all floats IEEE-754 binary64.

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[6] = {'M', 'I', 'X', 'G', 'A', 'N'};

struct ModelCheckpoint {
  std::uint32_t format_version = kCheckpointVersion;
  MixGanModel model;
  std::optional<TrainerState> trainer;
  std::uint64_t epochs_trained = 0;
  std::optional<NormalizationStats> normalization;
};

namespace detail {

class ByteWriter {
public:
  explicit ByteWriter(std::ostream& out) : out_(out) {}

  void bytes(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data),
               static_cast<std::streamsize>(n));
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) {
    std::array<unsigned char, 4> b;
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b.data(), b.size());
  }
  void u64(std::uint64_t v) {
    std::array<unsigned char, 8> b;
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b.data(), b.size());
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f64_span(std::span<const double> v) {
    for (double x : v) f64(x);
  }

private:
  std::ostream& out_;
};

class ByteReader {
public:
  explicit ByteReader(std::istream& in) : in_(in) {}

  void bytes(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw CheckpointError(CheckpointError::Kind::corrupt,
                            "checkpoint truncated");
    }
  }
  std::uint8_t u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    std::array<unsigned char, 4> b;
    bytes(b.data(), b.size());
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{b[i]} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::array<unsigned char, 8> b;
    bytes(b.data(), b.size());
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{b[i]} << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  void f64_span(std::span<double> v) {
    for (double& x : v) x = f64();
  }
  bool at_eof() {
    in_.peek();
    return in_.eof();
  }

private:
  std::istream& in_;
};

inline nlohmann::json config_to_json(const MixGanConfig& c) {
  return nlohmann::json{{"input_dim", c.input_dim},
                        {"latent_dim", c.latent_dim},
                        {"encoder_hidden", c.encoder_hidden},
                        {"discriminator_hidden", c.discriminator_hidden},
                        {"dropout_rate", c.dropout_rate},
                        {"leaky_slope", c.leaky_slope}};
}

inline MixGanConfig config_from_json(const nlohmann::json& j) {
  MixGanConfig c;
  c.input_dim = j.at("input_dim").get<std::size_t>();
  c.latent_dim = j.at("latent_dim").get<std::size_t>();
  c.encoder_hidden = j.at("encoder_hidden").get<std::vector<std::size_t>>();
  c.discriminator_hidden =
      j.at("discriminator_hidden").get<std::vector<std::size_t>>();
  c.dropout_rate = j.at("dropout_rate").get<double>();
  c.leaky_slope = j.at("leaky_slope").get<double>();
  return c;
}

inline nlohmann::json norm_to_json(const NormalizationStats& s) {
  return nlohmann::json{
      {"kind", s.kind == NormKind::minmax ? "minmax" : "zscore"},
      {"a", s.a},
      {"b", s.b},
      {"fitted_on", s.fitted_on}};
}

inline NormalizationStats norm_from_json(const nlohmann::json& j) {
  NormalizationStats s;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "minmax") {
    s.kind = NormKind::minmax;
  } else if (kind == "zscore") {
    s.kind = NormKind::zscore;
  } else {
    throw CheckpointError(CheckpointError::Kind::corrupt,
                          "unknown normalization kind '" + kind + "'");
  }
  s.a = j.at("a").get<std::vector<double>>();
  s.b = j.at("b").get<std::vector<double>>();
  s.fitted_on = j.at("fitted_on").get<std::string>();
  return s;
}

inline void write_mlp(ByteWriter& w, const nn::Mlp& mlp) {
  w.u64(mlp.layers.size());
  for (const auto& layer : mlp.layers) {
    w.u8(static_cast<std::uint8_t>(layer.activation));
    w.u64(layer.weights.rows);
    w.u64(layer.weights.cols);
    w.f64_span(layer.weights.values);
    w.u64(layer.bias.size());
    w.f64_span(layer.bias);
  }
}

/// Overwrites the parameters of an Mlp whose architecture was rebuilt from
/// the config block; any structural disagreement means a corrupt file.
inline void read_mlp_into(ByteReader& r, nn::Mlp& mlp, const char* name) {
  if (r.u64() != mlp.layers.size()) {
    throw CheckpointError(CheckpointError::Kind::corrupt,
                          std::string(name) + ": layer count mismatch");
  }
  for (auto& layer : mlp.layers) {
    if (r.u8() != static_cast<std::uint8_t>(layer.activation)) {
      throw CheckpointError(CheckpointError::Kind::corrupt,
                            std::string(name) + ": activation tag mismatch");
    }
    const std::uint64_t rows = r.u64();
    const std::uint64_t cols = r.u64();
    if (rows != layer.weights.rows || cols != layer.weights.cols) {
      throw CheckpointError(CheckpointError::Kind::corrupt,
                            std::string(name) + ": weight shape mismatch");
    }
    r.f64_span(layer.weights.values);
    if (r.u64() != layer.bias.size()) {
      throw CheckpointError(CheckpointError::Kind::corrupt,
                            std::string(name) + ": bias length mismatch");
    }
    r.f64_span(layer.bias);
  }
}

inline void write_adam(ByteWriter& w, const nn::AdamState& s) {
  w.u64(s.step_count);
  w.f64(s.hyper.learning_rate);
  w.f64(s.hyper.beta1);
  w.f64(s.hyper.beta2);
  w.f64(s.hyper.epsilon);
  w.u64(s.m_weights.size());
  for (std::size_t i = 0; i < s.m_weights.size(); ++i) {
    w.u64(s.m_weights[i].size());
    w.f64_span(s.m_weights[i]);
    w.f64_span(s.v_weights[i]);
    w.u64(s.m_bias[i].size());
    w.f64_span(s.m_bias[i]);
    w.f64_span(s.v_bias[i]);
  }
}

inline nn::AdamState read_adam(ByteReader& r, const nn::Mlp& mlp,
                               const char* name) {
  nn::AdamState s;
  s.step_count = r.u64();
  s.hyper.learning_rate = r.f64();
  s.hyper.beta1 = r.f64();
  s.hyper.beta2 = r.f64();
  s.hyper.epsilon = r.f64();
  const std::uint64_t n_layers = r.u64();
  if (n_layers != mlp.layers.size()) {
    throw CheckpointError(CheckpointError::Kind::corrupt,
                          std::string(name) + ": optimizer layer count");
  }
  for (std::size_t i = 0; i < n_layers; ++i) {
    const std::uint64_t wlen = r.u64();
    if (wlen != mlp.layers[i].weights.size()) {
      throw CheckpointError(CheckpointError::Kind::corrupt,
                            std::string(name) + ": optimizer weight length");
    }
    s.m_weights.emplace_back(wlen);
    r.f64_span(s.m_weights.back());
    s.v_weights.emplace_back(wlen);
    r.f64_span(s.v_weights.back());
    const std::uint64_t blen = r.u64();
    if (blen != mlp.layers[i].bias.size()) {
      throw CheckpointError(CheckpointError::Kind::corrupt,
                            std::string(name) + ": optimizer bias length");
    }
    s.m_bias.emplace_back(blen);
    r.f64_span(s.m_bias.back());
    s.v_bias.emplace_back(blen);
    r.f64_span(s.v_bias.back());
  }
  return s;
}

}  // namespace detail

inline void save_checkpoint(const ModelCheckpoint& cp,
                            const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw CheckpointError(CheckpointError::Kind::io,
                          "cannot open '" + path.string() + "' for writing");
  }
  detail::ByteWriter w(out);
  w.bytes(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.u32(cp.format_version);

  nlohmann::json header;
  header["model"] = detail::config_to_json(cp.model.config);
  header["normalization"] = cp.normalization
                                ? detail::norm_to_json(*cp.normalization)
                                : nlohmann::json(nullptr);
  const std::string json_text = header.dump();
  w.u64(json_text.size());
  w.bytes(json_text.data(), json_text.size());

  w.u64(cp.epochs_trained);
  detail::write_mlp(w, cp.model.encoder);
  detail::write_mlp(w, cp.model.generator);
  detail::write_mlp(w, cp.model.discriminator);

  w.u8(cp.trainer ? 1 : 0);
  if (cp.trainer) {
    detail::write_adam(w, cp.trainer->ae_encoder);
    detail::write_adam(w, cp.trainer->ae_generator);
    detail::write_adam(w, cp.trainer->adv_generator);
    detail::write_adam(w, cp.trainer->discriminator);
  }
  out.flush();
  if (!out) {
    throw CheckpointError(CheckpointError::Kind::io,
                          "write to '" + path.string() + "' failed");
  }
}

inline void save_checkpoint(const MixGanModel& model,
                            const TrainerState& trainer,
                            const std::filesystem::path& path) {
  ModelCheckpoint cp;
  cp.model = model;
  cp.trainer = trainer;
  cp.epochs_trained = trainer.epochs_trained;
  save_checkpoint(cp, path);
}

/// Loads a checkpoint. When expected_config is given, a checkpoint written
/// for a different architecture is rejected with a config-mismatch error.
inline ModelCheckpoint load_checkpoint(
    const std::filesystem::path& path,
    const MixGanConfig* expected_config = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CheckpointError(CheckpointError::Kind::io,
                          "cannot open '" + path.string() + "' for reading");
  }
  detail::ByteReader r(in);
  char magic[sizeof(kCheckpointMagic)];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw CheckpointError(CheckpointError::Kind::corrupt,
                          "'" + path.string() + "' is not a checkpoint file");
  }
  ModelCheckpoint cp;
  cp.format_version = r.u32();
  if (cp.format_version != kCheckpointVersion) {
    throw CheckpointError(CheckpointError::Kind::version_mismatch,
                          "checkpoint format version " +
                              std::to_string(cp.format_version) +
                              " not supported (expected " +
                              std::to_string(kCheckpointVersion) + ")");
  }

  const std::uint64_t json_len = r.u64();
  if (json_len > (1u << 26)) {
    throw CheckpointError(CheckpointError::Kind::corrupt,
                          "unreasonable config block size");
  }
  std::string json_text(json_len, '\0');
  r.bytes(json_text.data(), json_len);
  nlohmann::json header = nlohmann::json::parse(json_text, nullptr, false);
  if (header.is_discarded()) {
    throw CheckpointError(CheckpointError::Kind::corrupt,
                          "config block is not valid JSON");
  }
  MixGanConfig config;
  try {
    config = detail::config_from_json(header.at("model"));
    if (!header.at("normalization").is_null()) {
      cp.normalization = detail::norm_from_json(header.at("normalization"));
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(CheckpointError::Kind::corrupt,
                          std::string("config block: ") + e.what());
  }
  if (expected_config != nullptr && !(config == *expected_config)) {
    throw CheckpointError(CheckpointError::Kind::config_mismatch,
                          "checkpoint architecture does not match the "
                          "requested configuration");
  }

  cp.epochs_trained = r.u64();

  // Rebuild the architecture from the config, then overwrite parameters.
  Rng scratch(0);
  cp.model = build_model(config, scratch);
  detail::read_mlp_into(r, cp.model.encoder, "encoder");
  detail::read_mlp_into(r, cp.model.generator, "generator");
  detail::read_mlp_into(r, cp.model.discriminator, "discriminator");

  if (r.u8() != 0) {
    TrainerState state;
    state.ae_encoder = detail::read_adam(r, cp.model.encoder, "ae_encoder");
    state.ae_generator =
        detail::read_adam(r, cp.model.generator, "ae_generator");
    state.adv_generator =
        detail::read_adam(r, cp.model.generator, "adv_generator");
    state.discriminator =
        detail::read_adam(r, cp.model.discriminator, "discriminator");
    state.epochs_trained = cp.epochs_trained;
    cp.trainer = std::move(state);
  }
  if (!r.at_eof()) {
    throw CheckpointError(CheckpointError::Kind::corrupt,
                          "trailing bytes after checkpoint payload");
  }
  return cp;
}

}  // namespace mixgan
