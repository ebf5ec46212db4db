#pragma once

#include <stdexcept>
#include <string>

namespace s3w {

// A requested feature combination is out of scope (wrong dimension for a
// closed form, weighted gradients, ...). Distinct from bad argument values.
struct UnsupportedError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Input exceeds a hard resource bound (e.g. assignment solver size). The CLI
// maps this to its capacity exit code.
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An optimizer step collapsed to the origin and cannot be retracted.
struct DegenerateStepError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace s3w
