// SPDX-License-Identifier: Apache-2.0

#ifndef FCDSAE_ERRORS_HPP
#define FCDSAE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fcdsae {

/// Shape mismatch between matrices, layers, or label lists.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed input file. Carries the 1-based row and the column name when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t row = 0, std::string column = {})
      : std::runtime_error(what), row_(row), column_(std::move(column)) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

/// Non-finite gradient or loss during optimization.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Stream frame of the wrong length.
class FrameError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace fcdsae

#endif  // FCDSAE_ERRORS_HPP
