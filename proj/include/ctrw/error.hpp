#pragma once

#include <stdexcept>
#include <string>

namespace ctrw {

// Two families, mirrored by the CLI exit codes: input validation (2) and
// numerical/solver failure (3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

/// Point outside the domain of an operator (x <= a, x >= b, beta outside (0,1)).
class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Malformed or inconsistent configuration.
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Input the implementation declines to handle (alpha = 1, unbounded tails, d > 1).
class UnsupportedError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class IoError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Grid too coarse for the requested quadrature.
class ResolutionError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Space window cannot honour the jump-tail tolerance.
class WindowError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Explicit time step exceeds the monotonicity bound.
class StabilityError : public NumericError {
 public:
  StabilityError(const std::string& what, double admissible_step)
      : NumericError(what), admissible_step_(admissible_step) {}
  double admissible_step() const noexcept { return admissible_step_; }

 private:
  double admissible_step_;
};

/// Waiting-time sequence too short to cover the requested horizon.
class InsufficientPathError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace ctrw
