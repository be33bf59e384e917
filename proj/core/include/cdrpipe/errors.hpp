#pragma once

#include <stdexcept>
#include <string>

namespace cdr {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A factorization hit a zero (or negative, for Cholesky) pivot.
class SingularSystemError : public Error {
 public:
  using Error::Error;
};

/// A quantity used as a denominator is zero.
class ZeroDenominatorError : public Error {
 public:
  using Error::Error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A time integration produced NaN or Inf.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unreadable persisted data.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace cdr
