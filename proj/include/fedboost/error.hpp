#pragma once

#include <stdexcept>
#include <string>

namespace fedboost {

enum class ErrorCode {
  kMissingCovariance,
  kEmptyCandidateSet,
  kNonFiniteScore,
  kDegenerateColumn,
  kNotStandardized,
  kIndexOutOfRange,
  kMalformedFrame,
  kUnknownVariant,
  kVersionMismatch,
  kLengthMismatch,
  kMissingSite,
  kPairMismatch,
  kProviderError,
  kLayoutInfeasible,
  kIndivisibleSplit,
  kEmptyResults,
  kSingleClass,
  kConfig,
  kIo,
  kTransport,
};

const char* error_code_name(ErrorCode code);

// Every failure raised by the library carries a code so callers (the CLI in
// particular) can map it to an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fedboost
