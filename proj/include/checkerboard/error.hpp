#pragma once

#include <stdexcept>
#include <string>

namespace checkerboard {

// Base of every error thrown by the library. The CLI maps each subclass to a
// distinct process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller supplied arguments that violate an operation's precondition.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Malformed file or serialized document.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Linear solve or other numerical routine failed on the given data.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Request would exceed a hard enumeration or memory guard.
class ResourceLimit : public Error {
 public:
  using Error::Error;
};

}  // namespace checkerboard
