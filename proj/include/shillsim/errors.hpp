#pragma once

#include <stdexcept>
#include <string>

namespace shillsim {

/// Base of every error raised by the library. The CLI maps the concrete
/// subclasses onto distinct process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad distribution parameters, out-of-range inputs, shape mismatches.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed or out-of-bounds model configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Raised when every importance weight is zero (ESS = 0).
class DegeneratePosterior : public Error {
 public:
  using Error::Error;
};

}  // namespace shillsim
