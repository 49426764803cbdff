#pragma once

#include <stdexcept>

namespace pbmv {

// Invalid user input: malformed files, domain violations, shape mismatches.
// The CLI maps this to exit code 2; anything else nonzero maps to 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pbmv
