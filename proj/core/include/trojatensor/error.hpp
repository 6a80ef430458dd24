#pragma once

#include <stdexcept>
#include <string>

namespace trojatensor {

enum class ErrorCode {
  MissingFile,
  SchemaViolation,
  DuplicateModelId,
  InconsistentShape,
  BadMagic,
  TruncatedFile,
  NonFiniteValue,
  ShapeMismatch,
  IoFailure,
  OrderExceedsRank,
  SingularDemixing,
  RankTooLarge,
  DegenerateSlice,
  ZeroVariance,
  NoBackdoorReference,
  EmptyEvaluation,
  SingleClassOnly,
  IndexOutOfRange,
  RankTooSmall,
  DegenerateInput,
  SingleCluster,
  SpecViolation,
  PreconditionViolation,
};

constexpr const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::DuplicateModelId: return "DuplicateModelId";
    case ErrorCode::InconsistentShape: return "InconsistentShape";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::OrderExceedsRank: return "OrderExceedsRank";
    case ErrorCode::SingularDemixing: return "SingularDemixing";
    case ErrorCode::RankTooLarge: return "RankTooLarge";
    case ErrorCode::DegenerateSlice: return "DegenerateSlice";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::NoBackdoorReference: return "NoBackdoorReference";
    case ErrorCode::EmptyEvaluation: return "EmptyEvaluation";
    case ErrorCode::SingleClassOnly: return "SingleClassOnly";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::RankTooSmall: return "RankTooSmall";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::SingleCluster: return "SingleCluster";
    case ErrorCode::SpecViolation: return "SpecViolation";
    case ErrorCode::PreconditionViolation: return "PreconditionViolation";
  }
  return "UnknownError";
}

/// Exception carrying a machine-readable code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace trojatensor
