#pragma once

#include <stdexcept>
#include <string>

namespace covert {

// Bad or out-of-range input. Maps to CLI exit code 2.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Inputs are individually valid but the formula is undefined there
// (nonpositive denominators, divergent limits). Maps to exit code 2.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A computation could not reach the required accuracy. Maps to exit code 3.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A covariance matrix violates the uncertainty relation.
class PhysicalityViolation : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

// Finite-difference step too small to resolve the fidelity drop.
class StepUnderflow : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

// Phase estimate requested for a zero-length I/Q vector.
class UndefinedAngle : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

// Output could not be written. Maps to exit code 4.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace covert
