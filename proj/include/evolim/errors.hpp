#pragma once

#include <stdexcept>
#include <string>

namespace evolim {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad caller input: non-finite fields, mismatched sizes, invalid parameters.
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

// An exponent exceeded the overflow guard.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Scenario / configuration problems (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Exponent arguments are clamped at +-kOverflowGuard and raise RangeError
// instead of silently saturating.
inline constexpr double kOverflowGuard = 500.0;

}  // namespace evolim
