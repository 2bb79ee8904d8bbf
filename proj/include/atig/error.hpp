#pragma once

#include <stdexcept>
#include <string>

namespace atig {

/// Malformed input: bad files, out-of-range symbols or cells, mismatched sizes.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation was called on an object in the wrong state.
class StateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Random environment placement failed after the retry budget.
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A fixed-point iteration hit its sweep cap.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}

  double residual() const { return residual_; }

 private:
  double residual_;
};

}  // namespace atig
