#pragma once

#include <stdexcept>
#include <string>

namespace ultra {

enum class ErrorCode {
  kDimension,
  kConfig,
  kDegeneratePoint,
  kPrecondition,
  kLookup,
  kParse,
  kEmptySplit,
  kState,
  kUndefinedMetric,
  kIo,
  kCorruptHeader,
  kVersionMismatch,
  kTruncated,
  kConfigMismatch,
  kDigestMismatch,
  kNumeric,
};

const char* to_string(ErrorCode code);

// Every failure raised by the library carries a code so callers (the CLI in
// particular) can map it onto an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ultra
