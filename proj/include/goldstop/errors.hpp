#pragma once

#include <stdexcept>
#include <string>

namespace goldstop {

// Precondition violations on user-supplied arguments (ordering, positivity, counts).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Quadrature, ODE or root-finding failure.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// The boundary ODE was evaluated on (or too close to) the curve h where c(i,f) = 0.
class SingularPointError : public NumericalError {
 public:
  explicit SingularPointError(const std::string& what) : NumericalError(what) {}
};

class UnsupportedOperation : public std::logic_error {
 public:
  explicit UnsupportedOperation(const std::string& what) : std::logic_error(what) {}
};

// A shot escaped to +infinity before reaching the end of its interval.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, double blow_up_abscissa)
      : NumericalError(what), blow_up_abscissa_(blow_up_abscissa) {}

  double blow_up_abscissa() const noexcept { return blow_up_abscissa_; }

 private:
  double blow_up_abscissa_;
};

// No shot stayed finite, so no minimal solution (and no optimal stopping time) exists.
class MinimalSolutionError : public DivergenceError {
 public:
  using DivergenceError::DivergenceError;
};

// Results that contradict a structural property the construction guarantees.
class ConsistencyError : public std::runtime_error {
 public:
  explicit ConsistencyError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace goldstop
