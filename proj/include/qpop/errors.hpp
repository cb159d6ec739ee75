#pragma once

#include <stdexcept>
#include <string>

namespace qpop {

/// Caller passed arguments that violate an operation's preconditions.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input lies outside the mathematical domain of a mapping (e.g. the power
/// policy evaluated at a non-positive Q-value).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The requested combination is well-formed but not supported by this back end.
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or invalid experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model failed while running (numerical or internal failure).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qpop
