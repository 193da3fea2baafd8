// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace rshmm {

enum class ErrorCode {
  Io = 1,
  Parse,
  MissingCell,
  DuplicateCell,
  CategoryOutOfRange,
  RaggedCovariates,
  NonIntegerCategory,
  DimensionMismatch,
  InvalidState,
  InvalidArgument,
  NonFiniteWeights,
  NumericalFailure,
  AllStartsFailed,
  Unsupported,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) {
  throw Error(code, std::string(error_code_name(code)) + ": " + what);
}

}  // namespace rshmm
