#pragma once

#include <stdexcept>
#include <string>

namespace spotvol {

// Raised for any violated precondition or malformed input.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a result breaks a mathematical guarantee (e.g. a PSD
// estimator producing a negative eigenvalue beyond tolerance).
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace spotvol
