#pragma once

#include <stdexcept>
#include <string>

namespace perwave {

/// Argument outside the mathematical domain of an operation (negative radius, t < 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A potential, barrier or nonlinearity description that violates its invariants.
class InvalidSpec : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Run configuration problems: CFL violations, bad grids, unknown experiments.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values met while integrating an ODE or PDE.
class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Monodromy matrix whose determinant is too far from one to be a Hill monodromy.
class InconsistentMatrix : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace perwave
