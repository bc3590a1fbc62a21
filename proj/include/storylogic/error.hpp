#pragma once

#include <stdexcept>
#include <string>

namespace storylogic {

// Base of every exception thrown by the library. The C API maps each
// subclass onto one status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input file or record does not follow its declared format.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Shapes, vocabularies, versions or modes that do not agree with each other.
class MismatchError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf in a loss, logit or gradient.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Bad configuration or argument supplied by the caller.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace storylogic
