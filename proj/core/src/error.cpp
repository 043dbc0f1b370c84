#include "stallwatch/error.hpp"

#include <fmt/format.h>

namespace stallwatch {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kMissingMetadata: return "MissingMetadata";
    case ErrorCode::kSequenceGap: return "SequenceGap";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInvalidBBox: return "InvalidBBox";
    case ErrorCode::kInvalidInterval: return "InvalidInterval";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kInvalidParam: return "InvalidParam";
    case ErrorCode::kVideoTooShort: return "VideoTooShort";
    case ErrorCode::kDetectorTimeout: return "DetectorTimeout";
    case ErrorCode::kProtocolError: return "ProtocolError";
    case ErrorCode::kMissingDetections: return "MissingDetections";
    case ErrorCode::kDuplicateGroundTruth: return "DuplicateGroundTruth";
    case ErrorCode::kUndefinedScore: return "UndefinedScore";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(fmt::format("{}: {}", to_string(code), message)),
      code_(code) {}

}  // namespace stallwatch
