#pragma once

#include <stdexcept>
#include <string>

namespace tailfit {

// Argument outside a distribution's support or a probability outside (0, 1).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Too few observations for the requested operation.
class InsufficientSampleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The sample cannot identify the model (zero variance and the like).
class DegenerateSampleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Base for estimation failures.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateMixtureError : public FitError {
 public:
  using FitError::FitError;
};

class StepSizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input file or configuration; mapped to exit code 2 by the CLI.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tailfit
