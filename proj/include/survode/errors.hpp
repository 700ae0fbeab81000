#pragma once

#include <stdexcept>
#include <string>

namespace survode {

// Input data or config violates a documented precondition.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed file content; message names the offending line.
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values or degenerate numerics at runtime.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Adaptive solver exceeded its step budget.
struct DivergenceError : NumericalError {
  explicit DivergenceError(const std::string& msg) : NumericalError(msg) {}
};

// API misuse (argument out of contract).
struct ContractError : std::logic_error {
  explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace survode
