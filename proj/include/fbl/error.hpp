#pragma once

#include <stdexcept>
#include <string>

namespace fbl {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: bad dimensions, out-of-range parameters, unnormalized mass.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Request outside what an evaluator can do (size guard, unreachable target).
class Infeasible : public Error {
 public:
  using Error::Error;
};

// Iterative method failed to converge.
class NumericFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace fbl
