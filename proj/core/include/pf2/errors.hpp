#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pf2 {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. Carries the 1-based line number of the offence.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Cholesky breakdown; minor() is the 1-based order of the first leading
// minor that failed to be positive.
class CholeskyError : public NumericalError {
 public:
  CholeskyError(long minor, double pivot)
      : NumericalError("cholesky: leading minor of order " + std::to_string(minor) +
                       " is not positive (pivot " + std::to_string(pivot) + ")"),
        minor_(minor),
        pivot_(pivot) {}

  long minor() const noexcept { return minor_; }
  double pivot() const noexcept { return pivot_; }

 private:
  long minor_;
  double pivot_;
};

}  // namespace pf2
