#pragma once

#include <stdexcept>
#include <string>

namespace seidm {

/// A car-following law produced a non-finite value (e.g. a gap collapsing
/// towards zero overflows the interaction term).
class NumericalDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The acceleration law has no finite equilibrium gap at the requested speed.
class NoRootError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter set violates one of its invariants.
class InvalidParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// No gap in the lane can host an inserted vehicle.
class InsertionInfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace seidm
