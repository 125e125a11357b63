#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sraf {

enum class ErrorCode {
  kInvalidParameter,
  kDimensionMismatch,
  kConditionNotApplicable,
  kParseError,
  kInvariantViolation,
  kHandshakeFailed,
  kAgentTimeout,
  kAgentProtocolError,
  kAgentDied,
  kRatioUndefined,
  kTerminatedState,
  kEmptyInput,
  kUnknownKey,
  kIoError,
  kIntegrityError,
};

std::string_view to_string(ErrorCode code);

// Every recoverable failure in the library surfaces as this exception type;
// callers switch on code() rather than on the message text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The text after the "CODE: " prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace sraf
