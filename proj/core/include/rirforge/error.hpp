#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rirforge {

enum class ErrorKind {
  kAllZeroSignal,
  kInvalidGeometry,
  kCoincidentPoints,
  kInfeasibleGeometry,
  kInvalidSchedule,
  kShapeMismatch,
  kInvalidConfig,
  kLengthNotDivisible,
  kGraphConsumed,
  kCorruptCheckpoint,
  kVersionMismatch,
  kZeroTargetResidual,
  kNonFiniteLoss,
  kIoError,
  kInvalidArgument,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (and the CLI)
// can branch on it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace rirforge
