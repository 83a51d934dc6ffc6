#pragma once

#include <stdexcept>
#include <string>

namespace caus {

// Every failure raised by the library carries one of these codes. The C API
// maps them one-to-one onto caus_status values.
enum class ErrorCode {
  InvalidArgument = 1,
  DimensionMismatch,
  NonFiniteInput,
  TooFewSamples,
  DegenerateData,
  SingularCovariateBlock,
  SingularCholesky,
  RankUnattainable,
  TooFewDirections,
  MissingBigM,
  EnumerationTooLarge,
  EmptyBounds,
  InconsistentInstance,
  SolverFailure,
  BackendUnavailable,
  NumericalFailure,
  IterationLimit,
  ParseError,
  MissingInput,
  IoError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace caus
