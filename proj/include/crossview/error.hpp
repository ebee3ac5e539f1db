#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace crossview {

enum class ErrorCode {
  kInvalidArgument,
  kDegenerateView,
  kRankDeficient,
  kLevelMismatch,
  kFileNotFound,
  kMalformedJson,
  kSchemaViolation,
  kValueOutOfRange,
  kUnsupportedFormat,
  kTruncatedFile,
  kGtRequired,
  kIoFailure,
};

/// Stable machine-readable name, e.g. "degenerate_view".
std::string_view to_string(ErrorCode code);

/// Library-wide exception. `field()` names the offending input (a JSON path
/// for manifest errors), empty when not applicable.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string field = {})
      : std::runtime_error(message), code_(code), field_(std::move(field)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorCode code_;
  std::string field_;
};

}  // namespace crossview
