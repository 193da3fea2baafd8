// SPDX-License-Identifier: Apache-2.0
#include "rshmm/error.hpp"

namespace rshmm {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::MissingCell: return "MissingCell";
    case ErrorCode::DuplicateCell: return "DuplicateCell";
    case ErrorCode::CategoryOutOfRange: return "CategoryOutOfRange";
    case ErrorCode::RaggedCovariates: return "RaggedCovariates";
    case ErrorCode::NonIntegerCategory: return "NonIntegerCategory";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonFiniteWeights: return "NonFiniteWeights";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::AllStartsFailed: return "AllStartsFailed";
    case ErrorCode::Unsupported: return "Unsupported";
  }
  return "Unknown";
}

}  // namespace rshmm
