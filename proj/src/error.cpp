#include "crossview/error.hpp"

namespace crossview {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kDegenerateView: return "degenerate_view";
    case ErrorCode::kRankDeficient: return "rank_deficient";
    case ErrorCode::kLevelMismatch: return "level_mismatch";
    case ErrorCode::kFileNotFound: return "file_not_found";
    case ErrorCode::kMalformedJson: return "malformed_json";
    case ErrorCode::kSchemaViolation: return "schema_violation";
    case ErrorCode::kValueOutOfRange: return "value_out_of_range";
    case ErrorCode::kUnsupportedFormat: return "unsupported_format";
    case ErrorCode::kTruncatedFile: return "truncated_file";
    case ErrorCode::kGtRequired: return "gt_required";
    case ErrorCode::kIoFailure: return "io_failure";
  }
  return "unknown";
}

}  // namespace crossview
