#pragma once

#include <stdexcept>
#include <string>

namespace relay {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Matrix or signal shapes that do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Parameters that violate a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed to produce an acceptable answer
/// (divergence, singular pivot, non-stabilizing solution).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace relay
