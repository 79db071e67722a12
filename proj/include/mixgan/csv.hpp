#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mixgan/core/error.hpp"
#include "mixgan/data.hpp"

namespace mixgan {

// Feature CSV schema: id,corpus,session,speaker,label,f0000..f{D-1}
// One row per utterance, UTF-8, 4-digit zero-padded feature columns.

inline constexpr std::size_t kCsvMetaColumns = 5;

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string feature_column_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "f%04zu", i);
  return buf;
}

}  // namespace detail

inline FeatureDataset load_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError(DataError::Kind::io,
                    "cannot open '" + path.string() + "' for reading");
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(DataError::Kind::bad_header,
                    "'" + path.string() + "' is empty");
  }
  const auto header = detail::split_csv_line(line);
  static const char* kMeta[] = {"id", "corpus", "session", "speaker", "label"};
  if (header.size() <= kCsvMetaColumns) {
    throw DataError(DataError::Kind::bad_header,
                    "header has no feature columns");
  }
  for (std::size_t i = 0; i < kCsvMetaColumns; ++i) {
    if (header[i] != kMeta[i]) {
      throw DataError(DataError::Kind::bad_header,
                      "header column " + std::to_string(i + 1) + " is '" +
                          header[i] + "', expected '" + kMeta[i] + "'");
    }
  }
  const std::size_t dim = header.size() - kCsvMetaColumns;
  for (std::size_t i = 0; i < dim; ++i) {
    if (header[kCsvMetaColumns + i] != detail::feature_column_name(i)) {
      throw DataError(DataError::Kind::bad_header,
                      "feature column " + std::to_string(i) + " is named '" +
                          header[kCsvMetaColumns + i] + "', expected '" +
                          detail::feature_column_name(i) + "'");
    }
  }

  FeatureDataset data;
  std::vector<double> features;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DataError(DataError::Kind::malformed_row,
                      "line " + std::to_string(line_no) + ": expected " +
                          std::to_string(header.size()) + " fields, got " +
                          std::to_string(fields.size()));
    }
    data.ids.push_back(fields[0]);
    if (data.corpus.empty()) data.corpus = fields[1];
    data.sessions.push_back(fields[2]);
    data.speakers.push_back(fields[3]);
    try {
      data.labels.push_back(label_from_string(fields[4]));
    } catch (const DataError& e) {
      throw DataError(DataError::Kind::unknown_label,
                      "line " + std::to_string(line_no) + ": " + e.what());
    }
    for (std::size_t i = 0; i < dim; ++i) {
      const std::string& f = fields[kCsvMetaColumns + i];
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc{} || res.ptr != f.data() + f.size()) {
        throw DataError(DataError::Kind::non_numeric,
                        "line " + std::to_string(line_no) + ", column " +
                            detail::feature_column_name(i) +
                            ": non-numeric value '" + f + "'");
      }
      features.push_back(v);
    }
  }
  if (data.ids.empty()) {
    throw DataError(DataError::Kind::empty,
                    "'" + path.string() + "' contains no data rows");
  }
  data.features.rows = data.ids.size();
  data.features.cols = dim;
  data.features.values = std::move(features);
  data.one_hot = one_hot_from_labels(data.labels);
  data.validate();
  return data;
}

namespace detail {

inline void format_double(std::string& out, double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof(buf), "%.17g", v);
  out.append(buf, static_cast<std::size_t>(len));
}

}  // namespace detail

inline void save_feature_csv(const FeatureDataset& data,
                             const std::filesystem::path& path) {
  data.validate();
  std::ofstream out(path);
  if (!out) {
    throw DataError(DataError::Kind::io,
                    "cannot open '" + path.string() + "' for writing");
  }
  std::string buf = "id,corpus,session,speaker,label";
  for (std::size_t i = 0; i < data.dim(); ++i) {
    buf.push_back(',');
    buf += detail::feature_column_name(i);
  }
  buf.push_back('\n');
  for (std::size_t r = 0; r < data.size(); ++r) {
    buf += data.ids[r];
    buf.push_back(',');
    buf += data.corpus;
    buf.push_back(',');
    buf += data.sessions[r];
    buf.push_back(',');
    buf += data.speakers[r];
    buf.push_back(',');
    buf += label_to_string(data.labels[r]);
    for (std::size_t c = 0; c < data.dim(); ++c) {
      buf.push_back(',');
      detail::format_double(buf, data.features(r, c));
    }
    buf.push_back('\n');
    if (buf.size() > (1u << 20)) {
      out << buf;
      buf.clear();
    }
  }
  out << buf;
  if (!out) {
    throw DataError(DataError::Kind::io,
                    "write to '" + path.string() + "' failed");
  }
}

}  // namespace mixgan
