#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nlad {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Invalid or conflicting configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file or bitstream. `offset` is the byte position at which
/// the problem was detected.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Non-finite values or a numerically degenerate problem.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Zero-energy frame handed to linear prediction.
class DegenerateFrameError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace nlad
