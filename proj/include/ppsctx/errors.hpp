#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ppsctx {

enum class ErrorCode {
  ZeroVector,
  DimensionMismatch,
  InvalidOperator,
  NotAProjector,
  InvalidPvm,
  InvalidScenario,
  UnknownPvm,
  IndexOutOfRange,
  ImpossiblePostselection,
  ZeroProbabilityOutcome,
  NotADensityOperator,
  NoAcceptedRuns,
  PreconditionViolated,
  NonorthogonalityRequired,
  NotAParadox,
  ParseError,
  UnknownBuiltin,
  NotAScenario,
  IoError,
  InvalidArgument,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidOperator: return "InvalidOperator";
    case ErrorCode::NotAProjector: return "NotAProjector";
    case ErrorCode::InvalidPvm: return "InvalidPvm";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::UnknownPvm: return "UnknownPvm";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::ImpossiblePostselection: return "ImpossiblePostselection";
    case ErrorCode::ZeroProbabilityOutcome: return "ZeroProbabilityOutcome";
    case ErrorCode::NotADensityOperator: return "NotADensityOperator";
    case ErrorCode::NoAcceptedRuns: return "NoAcceptedRuns";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::NonorthogonalityRequired: return "NonorthogonalityRequired";
    case ErrorCode::NotAParadox: return "NotAParadox";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownBuiltin: return "UnknownBuiltin";
    case ErrorCode::NotAScenario: return "NotAScenario";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so the
/// CLI can report a stable machine-readable token.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ppsctx
