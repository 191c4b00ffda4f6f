#include "elemgrasp/errors.hpp"

namespace elemgrasp {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kSchemaViolation: return "SchemaViolation";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kRejectScene: return "RejectScene";
    case ErrorCode::kUngraspable: return "Ungraspable";
    case ErrorCode::kDiscardAugmentation: return "DiscardAugmentation";
    case ErrorCode::kMissingSplit: return "MissingSplit";
    case ErrorCode::kEmptySplit: return "EmptySplit";
    case ErrorCode::kInvalidClass: return "InvalidClass";
    case ErrorCode::kNoElementsDetected: return "NoElementsDetected";
    case ErrorCode::kIo: return "IoError";
  }
  return "Error";
}

}  // namespace elemgrasp
