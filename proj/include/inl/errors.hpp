#pragma once

#include <stdexcept>
#include <string>

namespace inl {

/// A state left the domain of the nonlinear map (it reached a factorized
/// cell boundary) or an argument lies outside an operation's domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The fixed-step integrator drifted off the unit sphere by more than the
/// allowed per-step tolerance.
class StepTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine failed to converge (quadrature, series, game length).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace inl
