#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fatigue {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input violates a documented range, shape or precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Malformed record in a line-oriented input. line() is 1-based.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// NaN or Inf produced inside a computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace fatigue
