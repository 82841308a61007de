#pragma once

#include <stdexcept>
#include <string>

namespace plf {

inline constexpr const char* kVersion = "0.1.0";

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be opened, read, written or renamed.
class IoError : public Error {
 public:
  using Error::Error;
};

// Input data violates a format rule or a precondition of an operation.
class DataError : public Error {
 public:
  using Error::Error;
};

// A caller-supplied parameter is out of range.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace plf
