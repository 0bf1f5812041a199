#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qolab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (schema document, CSV, SQL). Carries a position
/// whose meaning depends on the input: byte offset for SQL and JSON,
/// 1-based line for CSV.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " (at " + std::to_string(position) + ")"), position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

/// SQL construct outside the conjunctive select-project-join dialect.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class PlanError : public Error {
 public:
  using Error::Error;
};

class OptimizerError : public Error {
 public:
  using Error::Error;
};

/// Execution exceeded its wall-clock deadline or row budget.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

}  // namespace qolab
