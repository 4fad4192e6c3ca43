#include "ultra/error.hpp"

namespace ultra {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimension: return "dimension error";
    case ErrorCode::kConfig: return "configuration error";
    case ErrorCode::kDegeneratePoint: return "degenerate point";
    case ErrorCode::kPrecondition: return "precondition violated";
    case ErrorCode::kLookup: return "lookup error";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kEmptySplit: return "empty split";
    case ErrorCode::kState: return "state error";
    case ErrorCode::kUndefinedMetric: return "undefined metric";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kCorruptHeader: return "corrupt header";
    case ErrorCode::kVersionMismatch: return "version mismatch";
    case ErrorCode::kTruncated: return "truncated file";
    case ErrorCode::kConfigMismatch: return "configuration mismatch";
    case ErrorCode::kDigestMismatch: return "dictionary digest mismatch";
    case ErrorCode::kNumeric: return "numeric failure";
  }
  return "unknown error";
}

}  // namespace ultra
