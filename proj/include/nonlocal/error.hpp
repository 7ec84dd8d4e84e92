#pragma once

#include <stdexcept>
#include <string>

namespace nonlocal {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// An input violated a documented invariant (bad interval, negative density,
// non-monotone kernel where one is required, ...).
class ValidationError : public Error {
public:
  using Error::Error;
};

// The combination of otherwise valid inputs cannot be run (e.g. the kernel
// support is shorter than one grid cell).
class ConfigError : public Error {
public:
  using Error::Error;
};

class UnsupportedOperation : public Error {
public:
  using Error::Error;
};

// A user supplied function produced a non-finite value.
class EvaluationError : public Error {
public:
  EvaluationError(const std::string& what, double at)
      : Error(what + " (at q = " + std::to_string(at) + ")"), argument_(at) {}

  double argument() const noexcept { return argument_; }

private:
  double argument_;
};

// The time stepper produced a non-finite density.
class SolverError : public Error {
public:
  SolverError(const std::string& what, std::size_t step, std::ptrdiff_t cell)
      : Error(what + " (step " + std::to_string(step) + ", cell " +
              std::to_string(cell) + ")"),
        step_(step), cell_(cell) {}

  std::size_t step() const noexcept { return step_; }
  std::ptrdiff_t cell() const noexcept { return cell_; }

private:
  std::size_t step_;
  std::ptrdiff_t cell_;
};

}  // namespace nonlocal
