#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace cohortsurv {

// Base class for every error the library reports to callers.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (CSV rows, survival vectors, targets).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what, int row = 0)
      : Error(row > 0 ? "row " + std::to_string(row) + ": " + what : what),
        row_(row) {}

  // 1-based line number in the source document, 0 when not tied to a row.
  int row() const noexcept { return row_; }

 private:
  int row_;
};

enum class ModelErrorKind {
  EmptyInput,
  NoEvents,
  DegenerateOutcome,
  ConstantColumn,
  DimensionMismatch,
  Divergence,
  Separation,
  NonIdentifiable,
  NotConverged,
};

// A model cannot be fitted or summarized. `column()` names the offending
// design column when one is responsible.
class ModelError : public Error {
 public:
  ModelError(ModelErrorKind kind, const std::string& what, std::string column = {})
      : Error(what), kind_(kind), column_(std::move(column)) {}

  ModelErrorKind kind() const noexcept { return kind_; }
  const std::string& column() const noexcept { return column_; }

 private:
  ModelErrorKind kind_;
  std::string column_;
};

// Raised by the Cholesky factorization when a matrix is not positive definite.
class NotPositiveDefinite : public Error {
 public:
  explicit NotPositiveDefinite(const std::string& what, std::size_t pivot = 0)
      : Error(what), pivot_(pivot) {}

  // Index of the diagonal entry where the factorization broke down.
  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

}  // namespace cohortsurv
