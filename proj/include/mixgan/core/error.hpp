#pragma once

#include <stdexcept>
#include <string>

namespace mixgan {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Incompatible matrix/layer/label dimensions.
class DimensionError : public Error {
public:
  explicit DimensionError(const std::string& msg) : Error(msg) {}
};

/// Invalid configuration value or malformed run-config document.
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Problems with input data: files, CSV rows, labels, empty sets.
class DataError : public Error {
public:
  enum class Kind {
    io,
    bad_header,
    malformed_row,
    unknown_label,
    non_numeric,
    empty,
    invalid
  };

  DataError(Kind kind, const std::string& msg) : Error(msg), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

/// Problems with model checkpoint files.
class CheckpointError : public Error {
public:
  enum class Kind { io, corrupt, version_mismatch, config_mismatch };

  CheckpointError(Kind kind, const std::string& msg) : Error(msg), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

/// Non-finite loss or parameter detected during training.
class NumericalError : public Error {
public:
  explicit NumericalError(const std::string& msg) : Error(msg) {}
};

}  // namespace mixgan
