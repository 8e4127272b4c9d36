#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace subsketch {

class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown by iterative kernels that hit their iteration cap.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::size_t iterations, double last_value)
      : std::runtime_error(what + " after " + std::to_string(iterations) + " iterations"),
        iterations_(iterations),
        last_value_(last_value) {}

  std::size_t iterations() const { return iterations_; }
  double last_value() const { return last_value_; }

 private:
  std::size_t iterations_;
  double last_value_;
};

class DegenerateSketch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ArgumentError(message);
}

}  // namespace subsketch
