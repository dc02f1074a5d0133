#pragma once

#include <stdexcept>
#include <string>

namespace infogeo {

/// Malformed input: wrong dimensions, out-of-range steps, bad indices.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Parameters outside the model's domain of existence (e.g. a massive
/// Klein-Gordon solution in D <= 2).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The requested method is not available for this input.
class CapabilityError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A stated precondition on the evaluation point does not hold.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A metric could not be inverted.
class InversionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A Wick rotation would produce imaginary cross terms.
class RotationInconsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Integration did not reach the requested tolerance. Carries the best
/// estimate obtained before giving up.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double best_value, double best_error)
      : std::runtime_error(what), best_value_(best_value), best_error_(best_error) {}

  double best_value() const noexcept { return best_value_; }
  double best_error() const noexcept { return best_error_; }

 private:
  double best_value_;
  double best_error_;
};

}  // namespace infogeo
