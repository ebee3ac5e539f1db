#pragma once

// Per-query solve results and their CSV / JSON serialization.
//
// CSV columns (fixed order):
//   query_id,dx,dz,theta_deg,lat_err_m,lon_err_m,az_err_deg,iters,final_cost,wall_ms
// Error columns are empty when the query has no ground truth.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "crossview/geometry.hpp"
#include "crossview/metrics.hpp"
#include "json.hpp"

namespace crossview {

struct QueryResult {
  std::string id;
  Pose3DoF final_pose;
  std::optional<PoseError> error;
  int iterations = 0;
  double final_cost = 0.0;
  double wall_ms = 0.0;
};

struct SolveReport {
  std::vector<QueryResult> rows;
  std::optional<RecallReport> aggregate;  // present when every row has an error
};

enum class ReportFormat { kCsv, kJson, kBoth };
/// "csv", "json" or "both".
ReportFormat parse_report_format(const std::string& name);

/// Fills `aggregate` from the rows when all of them carry an error.
void attach_aggregate(SolveReport& report);

std::string report_to_csv(const SolveReport& report);
nlohmann::json report_to_json(const SolveReport& report);

/// Writes report.csv and/or report.json into `out_dir` (created if needed).
void write_report(const SolveReport& report, const std::filesystem::path& out_dir, ReportFormat format);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

}  // namespace crossview
