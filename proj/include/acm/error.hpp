#pragma once

#include <stdexcept>
#include <string>

namespace acm {

/// Raised when inputs break a documented contract (bad file, bad config,
/// invariant violation). Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a computation leaves its numeric domain (log of a
/// non-positive probability, NaN in training). Maps to CLI exit code 2.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace acm
