#pragma once

#include <stdexcept>
#include <string>

namespace lorentzscope {

// Bad arguments to an operation (domain violations, invalid configs).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input files that cannot be read or parsed.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Analysis preconditions that the data does not satisfy (too short, too few
// states, degenerate samples, non-convergence under --strict).
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lorentzscope
