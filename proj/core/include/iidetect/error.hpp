#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace iidetect {

enum class ErrorCode {
  kDimensionMismatch,
  kNonConvergence,
  kSingularInnovationCovariance,
  kDomainError,
  kRankDeficient,
  kEmptyKernel,
  kNotPositiveDefinite,
  kDimsInvalid,
  kRankRetryExhausted,
  kDecodeDrift,
  kProtocolViolation,
  kTransportError,
  kInvalidArgument,
  kParseError,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace iidetect
