#pragma once

#include <stdexcept>
#include <string>

namespace segstab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two inputs that must share a grid do not.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A file does not follow its declared on-disk format.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Input content violates a precondition (range, missing data, degenerate statistics).
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace segstab
