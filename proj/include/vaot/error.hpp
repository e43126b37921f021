#pragma once

#include <stdexcept>
#include <string>

namespace vaot {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Matrix or vector shapes that do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A configuration value outside its admissible range, or an unknown key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An input outside the mathematical domain of an operation
/// (negative mass, zero-norm vector, non-positive kernel entry).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf produced by an iterative procedure.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, int iteration, const std::string& unit = "iteration")
      : Error(what + " (" + unit + " " + std::to_string(iteration) + ")"), iteration_(iteration) {}

  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

/// Malformed file contents.
class ParseError : public Error {
 public:
  ParseError(const std::string& path, long line, const std::string& what)
      : Error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

  long line() const noexcept { return line_; }

 private:
  long line_;
};

/// Filesystem failures, always carrying the offending path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace vaot
