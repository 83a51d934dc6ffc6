#include "core/error.hpp"

namespace caus {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::SingularCovariateBlock: return "SingularCovariateBlock";
    case ErrorCode::SingularCholesky: return "SingularCholesky";
    case ErrorCode::RankUnattainable: return "RankUnattainable";
    case ErrorCode::TooFewDirections: return "TooFewDirections";
    case ErrorCode::MissingBigM: return "MissingBigM";
    case ErrorCode::EnumerationTooLarge: return "EnumerationTooLarge";
    case ErrorCode::EmptyBounds: return "EmptyBounds";
    case ErrorCode::InconsistentInstance: return "InconsistentInstance";
    case ErrorCode::SolverFailure: return "SolverFailure";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::IterationLimit: return "IterationLimit";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingInput: return "MissingInput";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace caus
