#include "sraf/error.hpp"

namespace sraf {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidParameter: return "INVALID_PARAMETER";
    case ErrorCode::kDimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::kConditionNotApplicable: return "CONDITION_NOT_APPLICABLE";
    case ErrorCode::kParseError: return "PARSE_ERROR";
    case ErrorCode::kInvariantViolation: return "INVARIANT_VIOLATION";
    case ErrorCode::kHandshakeFailed: return "HANDSHAKE_FAILED";
    case ErrorCode::kAgentTimeout: return "AGENT_TIMEOUT";
    case ErrorCode::kAgentProtocolError: return "AGENT_PROTOCOL_ERROR";
    case ErrorCode::kAgentDied: return "AGENT_DIED";
    case ErrorCode::kRatioUndefined: return "RATIO_UNDEFINED";
    case ErrorCode::kTerminatedState: return "TERMINATED_STATE";
    case ErrorCode::kEmptyInput: return "EMPTY_INPUT";
    case ErrorCode::kUnknownKey: return "UNKNOWN_KEY";
    case ErrorCode::kIoError: return "IO_ERROR";
    case ErrorCode::kIntegrityError: return "INTEGRITY_ERROR";
  }
  return "UNKNOWN";
}

}  // namespace sraf
