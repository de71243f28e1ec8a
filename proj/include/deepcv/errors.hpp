#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace deepcv {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or argument combination (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or failed numerics during training/evaluation (CLI exit code 3).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// File system or serialization failure (CLI exit code 4).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint payload failed its length or checksum verification.
class CorruptCheckpoint : public IoError {
 public:
  using IoError::IoError;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Cholesky factorisation hit a non-positive pivot.
class DecompositionError : public NumericError {
 public:
  DecompositionError(std::size_t pivot, double value)
      : NumericError("cholesky: matrix is not positive definite (pivot " + std::to_string(pivot) +
                     " = " + std::to_string(value) + ")"),
        pivot_(pivot) {}

  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

}  // namespace deepcv
