#pragma once

#include <stdexcept>
#include <string>

namespace irp {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes or image dimensions disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated on-disk data.
class FormatError : public Error {
 public:
  using Error::Error;
};

// File could not be opened, read or written. The message names the path.
class IoError : public Error {
 public:
  using Error::Error;
};

// A value is outside its documented range.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Configuration file or override rejected.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace irp
