#pragma once

#include <stdexcept>
#include <string>

namespace mmr {

enum class ErrorCode {
  kInvalidInput,
  kDegenerateFit,
  kEmptyResult,
  kInfeasibleEndpoint,
  kNoPath,
  kCorridorGap,
  kSolverFailure,
  kStalePlan,
  kIo,
};

const char* to_string(ErrorCode code);

/// Every recoverable failure in the library is reported as an Error carrying a
/// machine-readable code; the CLI maps codes to exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "invalid-input";
    case ErrorCode::kDegenerateFit: return "degenerate-fit";
    case ErrorCode::kEmptyResult: return "empty-result";
    case ErrorCode::kInfeasibleEndpoint: return "infeasible-endpoint";
    case ErrorCode::kNoPath: return "no-path";
    case ErrorCode::kCorridorGap: return "corridor-gap";
    case ErrorCode::kSolverFailure: return "solver-failure";
    case ErrorCode::kStalePlan: return "stale-plan";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

}  // namespace mmr
