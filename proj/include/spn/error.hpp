#pragma once

#include <stdexcept>
#include <string>

namespace spn {

enum class ErrorCode {
  InvalidArgument,
  OutOfRange,
  ShapeMismatch,
  Io,
  BadFormat,
  Truncated,
  NonFinite,
  ZeroEnergy,
  InsufficientData,
  Runtime,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::Io: return "Io";
    case ErrorCode::BadFormat: return "BadFormat";
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::ZeroEnergy: return "ZeroEnergy";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::Runtime: return "Runtime";
  }
  return "Unknown";
}

/// Single exception type for the library; `code()` distinguishes failures.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// True for failures caused by input data rather than by the program.
  bool is_data_error() const noexcept {
    switch (code_) {
      case ErrorCode::Io:
      case ErrorCode::BadFormat:
      case ErrorCode::Truncated:
      case ErrorCode::NonFinite:
      case ErrorCode::ZeroEnergy:
      case ErrorCode::InsufficientData:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace spn
