#pragma once

#include <stdexcept>
#include <string>

namespace qscope {

/// Base class of all toolkit errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data: bad file magic, truncated records, incompatible
/// stream metadata, inconsistent trigger trains.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: empty correlation peak, degenerate fit input.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace qscope
