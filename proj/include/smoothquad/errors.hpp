#pragma once

#include <stdexcept>
#include <string>

namespace smoothquad {

/// Wrong vector/matrix length handed to a routine.
class InputShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Model, payoff or method parameter outside its admissible range.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A function evaluation produced a non-finite value.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(const std::string& what, double at)
      : std::runtime_error(what + " (at " + std::to_string(at) + ")"), at_(at) {}

  double at() const noexcept { return at_; }

 private:
  double at_;
};

/// Input outside the mathematical domain of a formula.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace smoothquad
