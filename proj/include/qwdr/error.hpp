#pragma once

#include <stdexcept>
#include <string>

namespace qwdr {

/// Invalid or inconsistent user input (config files, structure definitions).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Caller broke an API precondition (mismatched grids, negative rates).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A numerical procedure failed to converge or produced unusable output.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Energy window touches a lead potential or an eigenvalue; widen or shift it.
class WindowError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Vanishing denominator in the susceptibility.
class SingularParameters : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Steady state of the master equation is not unique.
class OracleDegeneracy : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace qwdr
