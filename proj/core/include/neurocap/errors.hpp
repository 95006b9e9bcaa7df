#pragma once

#include <stdexcept>
#include <string>

namespace neurocap {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-conforming matrix or model dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf encountered in an input, or a computation diverged.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A linear system could not be solved (singular or indefinite).
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (files, ids, token indices).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value or unknown configuration key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace neurocap
