#pragma once

#include <stdexcept>
#include <string>

#include "invuq/types.hpp"

namespace invuq {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Vector or operator sizes that do not line up.
class DimensionError : public Error {
 public:
  DimensionError(const std::string& what, Index expected, Index actual)
      : Error(what + ": expected dimension " + std::to_string(expected) +
              ", got " + std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}

  Index expected() const { return expected_; }
  Index actual() const { return actual_; }

 private:
  Index expected_;
  Index actual_;
};

class FactorizationError : public Error {
 public:
  explicit FactorizationError(Index pivot)
      : Error("matrix is not positive definite: non-positive pivot at index " +
              std::to_string(pivot)),
        pivot_(pivot) {}

  Index pivot() const { return pivot_; }

 private:
  Index pivot_;
};

// Requested operation is not supported by the object (no gradient, no direct
// sampler, non-linear model asked for an adjoint, ...).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

// Model evaluated outside the set where it is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace invuq
