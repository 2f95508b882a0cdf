#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace joinsample {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  /// 1-based line number, or 0 when the error is not tied to a line.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class InvalidJoinTree : public Error {
 public:
  using Error::Error;
};

class InvalidGhd : public Error {
 public:
  using Error::Error;
};

class UnknownRelation : public Error {
 public:
  using Error::Error;
};

class UnsupportedAttributes : public Error {
 public:
  using Error::Error;
};

class MissingIndex : public Error {
 public:
  using Error::Error;
};

class PositionOutOfRange : public Error {
 public:
  using Error::Error;
};

class PrimaryKeyViolation : public Error {
 public:
  using Error::Error;
};

class CapExceeded : public Error {
 public:
  using Error::Error;
};

class Timeout : public Error {
 public:
  using Error::Error;
};

/// Raised when a degree product or batch size no longer fits in 64 bits.
class CounterOverflow : public Error {
 public:
  using Error::Error;
};

}  // namespace joinsample
