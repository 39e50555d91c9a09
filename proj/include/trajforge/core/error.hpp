#pragma once

#include <stdexcept>
#include <string>

namespace trajforge {

/// Bad caller input: shapes, ranges, non-finite values.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operation called in the wrong order (e.g. backward before forward).
class InvalidState : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Inconsistent or unusable configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace trajforge
