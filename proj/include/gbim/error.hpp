#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gbim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: out-of-range ids, broken invariants, infeasible sizes.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Raised by the exact diffusion oracle when enumeration would be too large.
class OracleInfeasible : public Error {
 public:
  using Error::Error;
};

// Non-finite losses, non-positive-definite systems and similar.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace gbim
