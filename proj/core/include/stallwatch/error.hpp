#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stallwatch {

enum class ErrorCode {
  kParseError,
  kUnsupportedFormat,
  kMissingMetadata,
  kSequenceGap,
  kDimensionMismatch,
  kInvalidBBox,
  kInvalidInterval,
  kEmptyInput,
  kInsufficientData,
  kInvalidParam,
  kVideoTooShort,
  kDetectorTimeout,
  kProtocolError,
  kMissingDetections,
  kDuplicateGroundTruth,
  kUndefinedScore,
  kInvalidSpec,
  kConfigError,
  kIoError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// callers (and tests) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 protected:
  struct Verbatim {};
  // Uses `what` as the full message, without the code prefix.
  Error(ErrorCode code, const std::string& what, Verbatim)
      : std::runtime_error(what), code_(code) {}

 private:
  ErrorCode code_;
};

}  // namespace stallwatch
