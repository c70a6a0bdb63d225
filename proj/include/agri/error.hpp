#pragma once

#include <stdexcept>
#include <string>

namespace agri {

/// Base error for every recoverable failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file could not be parsed; the message carries "source:line: detail".
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace agri
