#pragma once

#include <stdexcept>
#include <string>

namespace hettrim {

/// Bad input: malformed data, out-of-range configuration, violated preconditions.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The computation itself could not produce a result (empty sub-population,
/// degenerate bootstrap, and so on).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hettrim
