#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ldpbo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A point was looked up in a precomputed kernel that is not bound to it.
class DomainMismatchError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure (non-PSD pivot, NaN input, negative variance).
/// `index()` identifies the pivot or array entry that failed.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, std::size_t index)
      : Error(what + " (index " + std::to_string(index) + ")"), index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// A raw reward exceeded the curator sensitivity bound B + R.
class SensitivityError : public Error {
 public:
  using Error::Error;
};

/// Malformed dataset or kernel CSV.
class IngestionError : public Error {
 public:
  using Error::Error;
};

/// Hard-instance parameters outside the region where the construction is valid.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// File-system failure; the message carries the failing path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ldpbo
