#include "rirforge/error.hpp"

namespace rirforge {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kAllZeroSignal: return "AllZeroSignal";
    case ErrorKind::kInvalidGeometry: return "InvalidGeometry";
    case ErrorKind::kCoincidentPoints: return "CoincidentPoints";
    case ErrorKind::kInfeasibleGeometry: return "InfeasibleGeometry";
    case ErrorKind::kInvalidSchedule: return "InvalidSchedule";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kInvalidConfig: return "InvalidConfig";
    case ErrorKind::kLengthNotDivisible: return "LengthNotDivisible";
    case ErrorKind::kGraphConsumed: return "GraphConsumed";
    case ErrorKind::kCorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorKind::kVersionMismatch: return "VersionMismatch";
    case ErrorKind::kZeroTargetResidual: return "ZeroTargetResidual";
    case ErrorKind::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::kIoError: return "IoError";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace rirforge
