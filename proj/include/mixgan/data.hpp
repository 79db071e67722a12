#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mixgan/core/error.hpp"
#include "mixgan/core/matrix.hpp"
#include "mixgan/core/rng.hpp"

namespace mixgan {

inline constexpr std::size_t kNumClasses = 4;
inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "angry", "happy", "neutral", "sad"};

/// Maps a label string to its class index. "excitement" folds into happy.
inline int label_from_string(std::string_view label) {
  if (label == "excitement") return 1;
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    if (label == kClassNames[i]) return static_cast<int>(i);
  }
  throw DataError(DataError::Kind::unknown_label,
                  "unknown label '" + std::string(label) + "'");
}

inline std::string_view label_to_string(int cls) {
  return kClassNames.at(static_cast<std::size_t>(cls));
}

/// A set of feature vectors with per-row label, session, and speaker
/// metadata. Immutable after construction in all pipelines.
struct FeatureDataset {
  Matrix2D features;                  // N x D
  std::vector<int> labels;            // class indices
  Matrix2D one_hot;                   // N x 4 label distributions
  std::vector<std::string> ids;
  std::vector<std::string> sessions;
  std::vector<std::string> speakers;
  std::string corpus;

  std::size_t size() const { return features.rows; }
  std::size_t dim() const { return features.cols; }

  void validate() const {
    const std::size_t n = features.rows;
    if (labels.size() != n || ids.size() != n || sessions.size() != n ||
        speakers.size() != n || one_hot.rows != n) {
      throw DataError(DataError::Kind::invalid,
                      "dataset field row counts are inconsistent");
    }
    if (one_hot.cols != kNumClasses) {
      throw DataError(DataError::Kind::invalid, "one_hot must have 4 columns");
    }
    for (int l : labels) {
      if (l < 0 || static_cast<std::size_t>(l) >= kNumClasses) {
        throw DataError(DataError::Kind::invalid,
                        "class index " + std::to_string(l) + " out of range");
      }
    }
  }
};

inline Matrix2D one_hot_from_labels(std::span<const int> labels) {
  Matrix2D oh(labels.size(), kNumClasses);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    oh(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return oh;
}

inline FeatureDataset subset(const FeatureDataset& data,
                             std::span<const std::size_t> idx) {
  FeatureDataset out;
  out.features = take_rows(data.features, idx);
  out.one_hot = take_rows(data.one_hot, idx);
  out.labels.reserve(idx.size());
  out.ids.reserve(idx.size());
  out.sessions.reserve(idx.size());
  out.speakers.reserve(idx.size());
  for (std::size_t i : idx) {
    out.labels.push_back(data.labels[i]);
    out.ids.push_back(data.ids[i]);
    out.sessions.push_back(data.sessions[i]);
    out.speakers.push_back(data.speakers[i]);
  }
  out.corpus = data.corpus;
  return out;
}

inline FeatureDataset concat(const FeatureDataset& a, const FeatureDataset& b) {
  if (a.dim() != b.dim()) {
    throw DimensionError("concat: feature dimensions differ");
  }
  FeatureDataset out;
  out.features = vstack(a.features, b.features);
  out.one_hot = vstack(a.one_hot, b.one_hot);
  out.labels = a.labels;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  out.ids = a.ids;
  out.ids.insert(out.ids.end(), b.ids.begin(), b.ids.end());
  out.sessions = a.sessions;
  out.sessions.insert(out.sessions.end(), b.sessions.begin(), b.sessions.end());
  out.speakers = a.speakers;
  out.speakers.insert(out.speakers.end(), b.speakers.begin(), b.speakers.end());
  out.corpus = a.corpus;
  return out;
}

// ---------------------------------------------------------------------------
// Normalization

enum class NormKind : std::uint8_t { minmax = 0, zscore = 1 };

/// Frozen per-feature statistics. minmax stores (min, max); zscore stores
/// (mean, std). Constant features normalize to 0 under either kind.
struct NormalizationStats {
  NormKind kind = NormKind::minmax;
  std::vector<double> a;  // min or mean
  std::vector<double> b;  // max or std
  std::string fitted_on;
};

inline NormalizationStats fit_normalizer(const FeatureDataset& data,
                                         NormKind kind) {
  const std::size_t n = data.size();
  const std::size_t d = data.dim();
  if (n < 2) {
    throw DataError(DataError::Kind::empty,
                    "fit_normalizer: need at least 2 samples");
  }
  NormalizationStats stats;
  stats.kind = kind;
  stats.fitted_on = data.corpus;
  stats.a.assign(d, 0.0);
  stats.b.assign(d, 0.0);
  if (kind == NormKind::minmax) {
    for (std::size_t c = 0; c < d; ++c) {
      double lo = data.features(0, c), hi = data.features(0, c);
      for (std::size_t r = 1; r < n; ++r) {
        lo = std::min(lo, data.features(r, c));
        hi = std::max(hi, data.features(r, c));
      }
      stats.a[c] = lo;
      stats.b[c] = hi;
    }
  } else {
    for (std::size_t c = 0; c < d; ++c) {
      double mean = 0.0;
      for (std::size_t r = 0; r < n; ++r) mean += data.features(r, c);
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        const double dlt = data.features(r, c) - mean;
        var += dlt * dlt;
      }
      stats.a[c] = mean;
      stats.b[c] = std::sqrt(var / static_cast<double>(n));
    }
  }
  return stats;
}

inline Matrix2D apply_normalizer(const NormalizationStats& stats,
                                 const Matrix2D& features) {
  if (features.cols != stats.a.size()) {
    throw DimensionError("apply_normalizer: feature dim " +
                         std::to_string(features.cols) + " vs stats dim " +
                         std::to_string(stats.a.size()));
  }
  Matrix2D out = features;
  for (std::size_t c = 0; c < out.cols; ++c) {
    const double a = stats.a[c];
    const double b = stats.b[c];
    if (stats.kind == NormKind::minmax) {
      const double range = b - a;
      for (std::size_t r = 0; r < out.rows; ++r) {
        out(r, c) = range > 0.0 ? (out(r, c) - a) / range : 0.0;
      }
    } else {
      for (std::size_t r = 0; r < out.rows; ++r) {
        out(r, c) = b > 0.0 ? (out(r, c) - a) / b : 0.0;
      }
    }
  }
  return out;
}

inline FeatureDataset apply_normalizer(const NormalizationStats& stats,
                                       const FeatureDataset& data) {
  FeatureDataset out = data;
  out.features = apply_normalizer(stats, data.features);
  return out;
}

/// Inverse map for non-constant features; constant features recover the
/// fitted constant (minmax) or mean (zscore).
inline Matrix2D denormalize(const NormalizationStats& stats,
                            const Matrix2D& features) {
  if (features.cols != stats.a.size()) {
    throw DimensionError("denormalize: feature dim mismatch");
  }
  Matrix2D out = features;
  for (std::size_t c = 0; c < out.cols; ++c) {
    const double a = stats.a[c];
    const double b = stats.b[c];
    if (stats.kind == NormKind::minmax) {
      const double range = b - a;
      for (std::size_t r = 0; r < out.rows; ++r) {
        out(r, c) = range > 0.0 ? out(r, c) * range + a : a;
      }
    } else {
      for (std::size_t r = 0; r < out.rows; ++r) {
        out(r, c) = b > 0.0 ? out(r, c) * b + a : a;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splits

struct LosoFold {
  std::string held_out_session;
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
};

/// One fold per distinct session (sorted lexicographically): the fold's test
/// set is exactly that session's rows, train is the complement.
inline std::vector<LosoFold> loso_splits(const FeatureDataset& data) {
  std::map<std::string, std::vector<std::size_t>> by_session;
  for (std::size_t i = 0; i < data.size(); ++i) {
    by_session[data.sessions[i]].push_back(i);
  }
  if (by_session.size() < 2) {
    throw DataError(DataError::Kind::invalid,
                    "loso_splits: need at least 2 distinct sessions, got " +
                        std::to_string(by_session.size()));
  }
  std::vector<LosoFold> folds;
  folds.reserve(by_session.size());
  for (const auto& [session, test_idx] : by_session) {
    LosoFold fold;
    fold.held_out_session = session;
    fold.test_idx = test_idx;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.sessions[i] != session) fold.train_idx.push_back(i);
    }
    folds.push_back(std::move(fold));
  }
  return folds;
}

/// Index form of the stratified split: the first output receives
/// round(N*first_fraction) rows with class proportions preserved to within
/// one sample per class (largest-remainder allocation).
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
stratified_split_indices(std::span<const int> labels, double first_fraction,
                         std::uint64_t seed) {
  if (first_fraction <= 0.0 || first_fraction >= 1.0) {
    throw ConfigError("stratified_split: fraction must be in (0,1)");
  }
  std::array<std::vector<std::size_t>, kNumClasses> per_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    per_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (!per_class[c].empty() && per_class[c].size() < 2) {
      throw DataError(DataError::Kind::invalid,
                      "stratified_split: class '" +
                          std::string(kClassNames[c]) +
                          "' has fewer than 2 samples");
    }
  }

  const auto total = static_cast<double>(labels.size());
  const auto target =
      static_cast<std::size_t>(std::llround(total * first_fraction));
  std::array<std::size_t, kNumClasses> take{};
  std::size_t allocated = 0;
  std::vector<std::pair<double, std::size_t>> remainders;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const double exact =
        static_cast<double>(per_class[c].size()) * first_fraction;
    take[c] = static_cast<std::size_t>(std::floor(exact));
    allocated += take[c];
    remainders.emplace_back(exact - std::floor(exact), c);
  }
  std::sort(remainders.begin(), remainders.end(), [](auto& x, auto& y) {
    return x.first != y.first ? x.first > y.first : x.second < y.second;
  });
  for (std::size_t i = 0; allocated < target && i < remainders.size(); ++i) {
    const std::size_t c = remainders[i].second;
    if (take[c] < per_class[c].size()) {
      ++take[c];
      ++allocated;
    }
  }

  Rng rng(seed);
  std::vector<std::size_t> first, second;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    auto& idx = per_class[c];
    for (std::size_t i = idx.size(); i > 1; --i) {
      std::swap(idx[i - 1], idx[rng.uniform_int(i)]);
    }
    first.insert(first.end(), idx.begin(),
                 idx.begin() + static_cast<std::ptrdiff_t>(take[c]));
    second.insert(second.end(),
                  idx.begin() + static_cast<std::ptrdiff_t>(take[c]),
                  idx.end());
  }
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  return {std::move(first), std::move(second)};
}

/// Splits into (dev, test) where dev holds dev_fraction of the rows.
inline std::pair<FeatureDataset, FeatureDataset> stratified_split(
    const FeatureDataset& data, double dev_fraction, std::uint64_t seed) {
  auto [dev_idx, test_idx] =
      stratified_split_indices(data.labels, dev_fraction, seed);
  return {subset(data, dev_idx), subset(data, test_idx)};
}

// ---------------------------------------------------------------------------
// Synthetic benchmark

/// Desk-scale stand-in corpus: 4 Gaussian clusters with guaranteed centroid
/// separation, round-robin session assignment, and a mild per-session shift.
struct BenchmarkConfig {
  std::size_t n_per_class = 200;
  std::size_t dim = 64;
  std::size_t n_sessions = 4;
  double class_separation = 6.0;
  double noise_std = 1.0;
  std::uint64_t seed = 1;
  // 0 means "derive from seed". A shared nonzero value lets two corpora
  // with different seeds share class means (cross-corpus analogue).
  std::uint64_t means_seed = 0;
  std::string corpus_name = "benchmark";
};

inline FeatureDataset make_benchmark(const BenchmarkConfig& cfg) {
  if (cfg.n_per_class == 0 || cfg.dim == 0 || cfg.n_sessions == 0 ||
      cfg.class_separation <= 0.0 || cfg.noise_std <= 0.0) {
    throw ConfigError("make_benchmark: all parameters must be positive");
  }

  const std::uint64_t means_seed =
      cfg.means_seed != 0 ? cfg.means_seed : cfg.seed;
  Rng means_rng(detail::splitmix64(means_seed) ^ 0x6d65616e73ULL);
  std::array<std::vector<double>, kNumClasses> means;
  for (auto& m : means) {
    m.resize(cfg.dim);
    for (double& v : m) v = means_rng.normal();
  }
  // Rescale so the closest pair of centroids sits exactly at
  // class_separation; all other pairs end up farther apart.
  double min_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    for (std::size_t j = i + 1; j < kNumClasses; ++j) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < cfg.dim; ++c) {
        const double d = means[i][c] - means[j][c];
        d2 += d * d;
      }
      min_dist = std::min(min_dist, std::sqrt(d2));
    }
  }
  const double scale = cfg.class_separation / min_dist;
  for (auto& m : means) {
    for (double& v : m) v *= scale;
  }

  Rng rng(cfg.seed);
  std::vector<std::vector<double>> session_shift(cfg.n_sessions);
  const double shift_std = 0.5 * cfg.noise_std;
  for (auto& s : session_shift) {
    s.resize(cfg.dim);
    for (double& v : s) v = shift_std * rng.normal();
  }

  const std::size_t n = cfg.n_per_class * kNumClasses;
  FeatureDataset data;
  data.corpus = cfg.corpus_name;
  data.features = Matrix2D(n, cfg.dim);
  data.labels.reserve(n);
  data.ids.reserve(n);
  data.sessions.reserve(n);
  data.speakers.reserve(n);

  std::size_t row = 0;
  for (std::size_t cls = 0; cls < kNumClasses; ++cls) {
    for (std::size_t i = 0; i < cfg.n_per_class; ++i, ++row) {
      const std::size_t ses = i % cfg.n_sessions;
      for (std::size_t c = 0; c < cfg.dim; ++c) {
        data.features(row, c) =
            means[cls][c] + session_shift[ses][c] + cfg.noise_std * rng.normal();
      }
      data.labels.push_back(static_cast<int>(cls));
      data.ids.push_back("utt" + std::to_string(row));
      char ses_name[32];
      std::snprintf(ses_name, sizeof(ses_name), "Ses%02zu", ses + 1);
      data.sessions.emplace_back(ses_name);
      data.speakers.push_back(std::string(ses_name) +
                              (i % 2 == 0 ? "_A" : "_B"));
    }
  }
  data.one_hot = one_hot_from_labels(data.labels);
  data.validate();
  return data;
}

}  // namespace mixgan
