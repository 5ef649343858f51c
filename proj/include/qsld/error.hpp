#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qsld {

enum class ErrorCode {
  kInvalidParameter,
  kTiltOutOfDomain,
  kUnstableInputs,
  kLengthMismatch,
  kInsufficientTail,
  kCgfOverflow,
  kNotTilted,
  kConstraintViolated,
  kThetaOutOfDomain,
  kConfigInvalid,
};

std::string_view error_code_name(ErrorCode code);

// Single exception type for the library; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidParameter: return "InvalidParameter";
    case ErrorCode::kTiltOutOfDomain: return "TiltOutOfDomain";
    case ErrorCode::kUnstableInputs: return "UnstableInputs";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kInsufficientTail: return "InsufficientTail";
    case ErrorCode::kCgfOverflow: return "CgfOverflow";
    case ErrorCode::kNotTilted: return "NotTilted";
    case ErrorCode::kConstraintViolated: return "ConstraintViolated";
    case ErrorCode::kThetaOutOfDomain: return "ThetaOutOfDomain";
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

}  // namespace qsld
