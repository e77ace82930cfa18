#pragma once

#include <stdexcept>
#include <string>

namespace concmeter {

// Numeric values are mirrored by cm_status in concmeter.h.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kDimensionMismatch = 2,
  kNonFinite = 3,
  kSingularTransform = 4,
  kUnsupported = 5,
  kInsufficientData = 6,
  kInfeasible = 7,
  kPrecondition = 8,
  kConfig = 9,
  kIo = 10,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace concmeter
