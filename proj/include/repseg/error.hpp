#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace repseg {

enum class ErrorCode {
  // data errors
  MalformedRow,
  InconsistentJointCount,
  EmptySequence,
  OverlappingSegments,
  OutOfRangeSegment,
  ZeroLengthSegment,
  DegenerateScale,
  LengthMismatch,
  DimensionMismatch,
  HeadMismatch,
  EmptyInput,
  EmptyGroup,
  TooFewSamples,
  MalformedJson,
  Io,
  // numeric failures
  NonFiniteGradient,
  GradientCheckFailed,
  // usage
  InvalidArgument,
};

enum class ErrorCategory { Usage, Data, Numeric };

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::InconsistentJointCount: return "InconsistentJointCount";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::OverlappingSegments: return "OverlappingSegments";
    case ErrorCode::OutOfRangeSegment: return "OutOfRangeSegment";
    case ErrorCode::ZeroLengthSegment: return "ZeroLengthSegment";
    case ErrorCode::DegenerateScale: return "DegenerateScale";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::HeadMismatch: return "HeadMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::MalformedJson: return "MalformedJson";
    case ErrorCode::Io: return "Io";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::GradientCheckFailed: return "GradientCheckFailed";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

constexpr ErrorCategory category(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NonFiniteGradient:
    case ErrorCode::GradientCheckFailed: return ErrorCategory::Numeric;
    case ErrorCode::InvalidArgument: return ErrorCategory::Usage;
    default: return ErrorCategory::Data;
  }
}

constexpr std::string_view to_string(ErrorCategory c) noexcept {
  switch (c) {
    case ErrorCategory::Usage: return "usage";
    case ErrorCategory::Data: return "data";
    case ErrorCategory::Numeric: return "numeric";
  }
  return "data";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }
  ErrorCategory category() const noexcept { return repseg::category(code_); }

 private:
  ErrorCode code_;
  std::string message_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace repseg
