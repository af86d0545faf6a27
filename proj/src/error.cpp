#include "cellsift/error.hpp"

namespace cellsift {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Io: return "IoError";
    case ErrorCode::RaggedRows: return "RaggedRows";
    case ErrorCode::EmptyTable: return "EmptyTable";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::Decode: return "DecodeError";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::LengthDrift: return "LengthDrift";
    case ErrorCode::BadProbability: return "BadProbability";
    case ErrorCode::UnknownToken: return "UnknownToken";
    case ErrorCode::FeatureLengthMismatch: return "FeatureLengthMismatch";
    case ErrorCode::NotTrained: return "NotTrained";
    case ErrorCode::BudgetExhausted: return "BudgetExhausted";
    case ErrorCode::NoSelectableColumn: return "NoSelectableColumn";
    case ErrorCode::ColumnExhausted: return "ColumnExhausted";
    case ErrorCode::LabelMismatch: return "LabelMismatch";
    case ErrorCode::BadPlan: return "BadPlan";
    case ErrorCode::EmptyLog: return "EmptyLog";
    case ErrorCode::Config: return "ConfigError";
    case ErrorCode::Internal: return "InternalError";
  }
  return "Unknown";
}

RaggedRowsError::RaggedRowsError(std::size_t row, std::size_t got, std::size_t expected)
    : Error(ErrorCode::RaggedRows, "row " + std::to_string(row) + " has " + std::to_string(got) +
                                       " fields, expected " + std::to_string(expected)),
      row_(row) {}

}  // namespace cellsift
