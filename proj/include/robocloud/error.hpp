#pragma once

#include <stdexcept>
#include <string>

namespace robocloud {

enum class ErrorCode {
  kInvalidArgument,
  kNotFound,
  kAlreadyExists,
  kOutOfSpace,
  kUnmounted,
  kOverlappingPrefix,
  kBackendFailure,
  kTimeRegression,
  kUnavailable,
};

// Every fallible operation in the library throws this; code() lets callers
// branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace robocloud
