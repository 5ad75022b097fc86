#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace abilu {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidPattern : public Error {
 public:
  using Error::Error;
};

class SingularBlock : public Error {
 public:
  using Error::Error;
};

/// A diagonal (block) pivot of a factorization or triangular factor is singular.
class SingularDiagonal : public Error {
 public:
  explicit SingularDiagonal(std::size_t row)
      : Error("singular diagonal block in block row " + std::to_string(row)), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// A scalar diagonal entry is exactly zero where a nonzero one is required.
class ZeroDiagonal : public Error {
 public:
  explicit ZeroDiagonal(std::size_t index)
      : Error("zero diagonal entry at scalar row " + std::to_string(index)), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class InvalidSchedule : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class InvalidSpec : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class NonTilingPattern : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace abilu
