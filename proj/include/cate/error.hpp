#pragma once

#include <stdexcept>
#include <string>

namespace cate {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or configuration (CLI exit code 1).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Input data violates a dataset invariant (CLI exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};

/// An estimator could not produce a result (CLI exit code 3).
class EstimationError : public Error {
 public:
  using Error::Error;
};

}  // namespace cate
