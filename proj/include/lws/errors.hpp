#pragma once

#include <stdexcept>
#include <string>

namespace lws {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or size mismatch between tensors / vectors.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A value outside the operation's domain (non-finite loss, bad label, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Bad run configuration (unknown mode, K < T for independent heads, ...).
// CLI maps this to exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Architecture chain that cannot be realised (dense after 4-d input, ...).
class SpecError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Missing or malformed input data. CLI maps this to exit code 2.
class DataError : public Error {
 public:
  using Error::Error;
};

// Binary file with an unexpected layout; message names the observed magic.
class FormatError : public DataError {
 public:
  using DataError::DataError;
};

// Report generation over an incomplete or empty run directory.
class ReportError : public DataError {
 public:
  using DataError::DataError;
};

// Optimizer state that does not cover a parameter it was asked to update.
class StateError : public Error {
 public:
  using Error::Error;
};

// Every repeat of an experiment failed. CLI maps this to exit code 3.
class AllRunsFailedError : public Error {
 public:
  using Error::Error;
};

}  // namespace lws
