#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace plap {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed expression source; `offset` is the byte position of the failure.
struct ParseError : Error {
  std::size_t offset;
  ParseError(const std::string& msg, std::size_t off)
      : Error(msg + " (at byte " + std::to_string(off) + ")"), offset(off) {}
};

// Expression evaluation left its numeric domain: division by zero, invalid
// power, or a non-finite intermediate.
struct EvalDomainError : Error {
  using Error::Error;
};

// Adaptive quadrature could not meet its tolerance; [a, b] is the worst
// remaining interval.
struct QuadratureError : Error {
  double a, b;
  QuadratureError(const std::string& msg, double a_, double b_)
      : Error(msg), a(a_), b(b_) {}
};

// No feasible point exists or could be reached.
struct InfeasibleError : Error {
  using Error::Error;
};

// A documented operation precondition was violated.
struct PreconditionError : Error {
  using Error::Error;
};

// Run configuration is invalid.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace plap
