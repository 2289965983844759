#pragma once

#include <stdexcept>
#include <string>

namespace br {

// Base class for everything this library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable/unwritable files, unsupported raster formats.
class IoError : public Error {
 public:
  using Error::Error;
};

// Bad parameter values, unknown config keys, contract violations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite values, admissibility breaches, solver divergence.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace br
