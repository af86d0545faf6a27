#pragma once

#include <stdexcept>
#include <string>

namespace cellsift {

enum class ErrorCode {
  Io = 1,
  RaggedRows,
  EmptyTable,
  ShapeMismatch,
  OutOfBounds,
  Decode,
  VersionMismatch,
  LengthDrift,
  BadProbability,
  UnknownToken,
  FeatureLengthMismatch,
  NotTrained,
  BudgetExhausted,
  NoSelectableColumn,
  ColumnExhausted,
  LabelMismatch,
  BadPlan,
  EmptyLog,
  Config,
  Internal,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Thrown by load_csv; carries the 1-based physical record number.
class RaggedRowsError : public Error {
 public:
  RaggedRowsError(std::size_t row, std::size_t got, std::size_t expected);
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class ShapeMismatchError : public Error {
 public:
  enum class Dimension { Rows, Columns, Schema };
  ShapeMismatchError(Dimension dim, const std::string& message)
      : Error(ErrorCode::ShapeMismatch, message), dim_(dim) {}
  Dimension dimension() const noexcept { return dim_; }

 private:
  Dimension dim_;
};

}  // namespace cellsift
