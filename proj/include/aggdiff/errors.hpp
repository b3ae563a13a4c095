#pragma once

#include <stdexcept>
#include <string>

namespace aggdiff {

/// A kernel or function was evaluated outside the set where it is defined.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A parameter is outside its admissible range.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The configuration sits on a collision where the requested quantity is singular.
class SingularConfiguration : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed user input (files, integrand values).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A validation check was asked to run outside the regime where it is meaningful.
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace aggdiff
