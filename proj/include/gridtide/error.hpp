#pragma once

#include <stdexcept>
#include <string>

namespace gridtide {

/// Bad input: malformed case/scenario files, inconsistent configuration,
/// violated preconditions. The CLI maps these to exit status 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure failed (non-convergence, singular system).
/// The CLI maps these to exit status 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gridtide
