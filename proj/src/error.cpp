#include "fedboost/error.hpp"

namespace fedboost {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingCovariance: return "MissingCovariance";
    case ErrorCode::kEmptyCandidateSet: return "EmptyCandidateSet";
    case ErrorCode::kNonFiniteScore: return "NonFiniteScore";
    case ErrorCode::kDegenerateColumn: return "DegenerateColumn";
    case ErrorCode::kNotStandardized: return "NotStandardized";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kMalformedFrame: return "MalformedFrame";
    case ErrorCode::kUnknownVariant: return "UnknownVariant";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kMissingSite: return "MissingSite";
    case ErrorCode::kPairMismatch: return "PairMismatch";
    case ErrorCode::kProviderError: return "ProviderError";
    case ErrorCode::kLayoutInfeasible: return "LayoutInfeasible";
    case ErrorCode::kIndivisibleSplit: return "IndivisibleSplit";
    case ErrorCode::kEmptyResults: return "EmptyResults";
    case ErrorCode::kSingleClass: return "SingleClass";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kTransport: return "TransportError";
  }
  return "Unknown";
}

}  // namespace fedboost
