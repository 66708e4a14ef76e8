#pragma once

#include <stdexcept>
#include <string>

namespace qgrowth {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid grid, scenario or solver configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Coefficient data that violates a structural invariant (ellipticity, bounds).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Requested reduction or method is not available for the given data.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

}  // namespace qgrowth
