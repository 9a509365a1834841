#include "skyfuse/error.hpp"

namespace skyfuse {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kDegenerateInput: return "DegenerateInput";
    case ErrorCode::kRayParallelToGround: return "RayParallelToGround";
    case ErrorCode::kCollinearPoints: return "CollinearPoints";
    case ErrorCode::kAntiparallelVectors: return "AntiparallelVectors";
    case ErrorCode::kNoBoundary: return "NoBoundary";
    case ErrorCode::kInsufficientGround: return "InsufficientGround";
    case ErrorCode::kBelowActivationHeight: return "BelowActivationHeight";
    case ErrorCode::kEmptyFilter: return "EmptyFilter";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kMaskFormat: return "MaskFormat";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kScenarioError: return "ScenarioError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace skyfuse
