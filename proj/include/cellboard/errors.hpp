#pragma once

#include <stdexcept>
#include <string>

namespace cellboard {

// Invalid user input: bad geometry parameters, parity violations, unknown
// kinds. The CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation would exceed one of the desk-scale guards (free spins,
// transfer height, Gram dimension). Also exit code 2.
class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Internal inconsistency, e.g. overlapping propagated blocks disagree.
// Indicates a bug rather than bad input.
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace cellboard
