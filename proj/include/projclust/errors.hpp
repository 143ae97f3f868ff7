#pragma once

#include <stdexcept>
#include <string>

namespace projclust {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed files, out-of-range parameters, inconsistent shapes.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A CSV or draw-file record that could not be parsed.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : ValidationError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Factorization failures that survived the jitter-retry policy, or
/// results that violate a numerical consistency check.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failures.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace projclust
