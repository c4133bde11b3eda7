#pragma once

#include <stdexcept>
#include <string>

namespace tdrom {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or matrix extents do not conform to an operation's rule.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed, truncated or mismatched binary/CSV file content.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Data-level problems: empty splits, too-short sequences, zero variance.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid or unknown configuration keys and values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or failed factorizations.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace tdrom
