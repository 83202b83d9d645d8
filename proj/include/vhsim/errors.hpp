#pragma once

#include <stdexcept>
#include <string>

namespace vhsim {

// Bad scenario input or an out-of-range argument from the caller.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An internal invariant was broken. Always a simulator bug, never user input.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A path could not carry a probe because one of its links had no coverage.
class UnreachableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void ensure(bool cond, const char* what) {
  if (!cond) throw InvariantViolation(what);
}

}  // namespace vhsim
