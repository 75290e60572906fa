#pragma once

#include <stdexcept>
#include <string>

namespace semscan {

// Base for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input data: malformed records, unknown labels, short history.
class DataError : public Error {
 public:
  using Error::Error;
};

// Bad configuration or argument values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace semscan
