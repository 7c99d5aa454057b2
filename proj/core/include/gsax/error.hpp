#pragma once

#include <stdexcept>
#include <string>

namespace gsax {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument violates a documented precondition.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be positive definite could not be factorized,
/// even after the permitted diagonal jitter.
class ConditioningError : public Error {
 public:
  using Error::Error;
};

/// Operation on an object that is not in a usable state (e.g. an unfitted model).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Sample variance is zero, so a variance ratio is undefined.
class DegenerateVariance : public Error {
 public:
  using Error::Error;
};

/// No candidate produced a finite acquisition score.
class SelectionError : public Error {
 public:
  using Error::Error;
};

/// Argument lies outside the mathematical domain of a formula.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Traces do not share a consistent sample-count axis.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

/// Unknown names or malformed configuration supplied by a user.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace gsax
