#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ucortest {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Too few samples for the kernel order or estimator in use.
class InsufficientSamplesError : public Error {
 public:
  using Error::Error;
};

/// A quantity whose formula has no valid value (zero denominator, n <= m, ...).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Shapes of two inputs do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Argument outside its documented domain.
class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

/// Exact evaluation would exceed the combinatorial work limit.
class ComplexityLimitError : public Error {
 public:
  using Error::Error;
};

/// Malformed input text. `line` is 1-based, `column` is 1-based or 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column = 0)
      : Error(what), line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Wraps a failure raised while processing variable pair (i, j), 0-based.
class PairError : public Error {
 public:
  PairError(const std::string& what, std::size_t i, std::size_t j)
      : Error(what), i_(i), j_(j) {}

  std::size_t i() const noexcept { return i_; }
  std::size_t j() const noexcept { return j_; }

 private:
  std::size_t i_;
  std::size_t j_;
};

}  // namespace ucortest
