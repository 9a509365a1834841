#pragma once

#include <stdexcept>
#include <string>

namespace skyfuse {

enum class ErrorCode {
  kDegenerateInput,
  kRayParallelToGround,
  kCollinearPoints,
  kAntiparallelVectors,
  kNoBoundary,
  kInsufficientGround,
  kBelowActivationHeight,
  kEmptyFilter,
  kInvalidArgument,
  kMaskFormat,
  kConfigError,
  kScenarioError,
};

const char* to_string(ErrorCode code) noexcept;

// Every recoverable failure in the library is reported through this type;
// callers switch on code() rather than on distinct exception classes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace skyfuse
