#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace skiroute {

enum class ErrorCode {
  OutOfBounds,
  AllNoData,
  DegenerateGeometry,
  NotApplicable,
  MissingAttribute,
  Unreachable,
  UnreachableFavorite,
  EmptyPlan,
  InfeasibleDuration,
  NoMatch,
  NoData,
  EmptyRegion,
  ChecksumMismatch,
  VersionMismatch,
  ParseError,
  InvalidArgument,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::AllNoData: return "AllNoData";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::NotApplicable: return "NotApplicable";
    case ErrorCode::MissingAttribute: return "MissingAttribute";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::UnreachableFavorite: return "UnreachableFavorite";
    case ErrorCode::EmptyPlan: return "EmptyPlan";
    case ErrorCode::InfeasibleDuration: return "InfeasibleDuration";
    case ErrorCode::NoMatch: return "NoMatch";
    case ErrorCode::NoData: return "NoData";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Domain error carrying a machine-readable code. The message is prefixed with
/// the code name so `what()` alone is enough for CLI diagnostics.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail, std::string subject = {})
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code),
        subject_(std::move(subject)) {}

  ErrorCode code() const noexcept { return code_; }

  // Identifier the error refers to (edge id, attribute list, ...), may be empty.
  const std::string& subject() const noexcept { return subject_; }

 private:
  ErrorCode code_;
  std::string subject_;
};

}  // namespace skiroute
