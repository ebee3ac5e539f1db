#include "crossview/report.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "crossview/error.hpp"

namespace crossview {

using nlohmann::json;

ReportFormat parse_report_format(const std::string& name) {
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "json") return ReportFormat::kJson;
  if (name == "both") return ReportFormat::kBoth;
  throw Error(ErrorCode::kInvalidArgument, "unknown report format '" + name + "'");
}

void attach_aggregate(SolveReport& report) {
  std::vector<PoseError> errors;
  for (const QueryResult& row : report.rows) {
    if (!row.error) {
      report.aggregate.reset();
      return;
    }
    errors.push_back(*row.error);
  }
  if (errors.empty()) return;
  report.aggregate = aggregate_report(errors);
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

namespace {

double to_deg(double rad) { return rad * 180.0 / kPi; }

json table_to_json(const RecallTable& t) {
  return {{"thresholds", t.thresholds}, {"recall", t.recall}, {"mean", t.mean}, {"median", t.median}};
}

}  // namespace

std::string report_to_csv(const SolveReport& report) {
  std::ostringstream out;
  out << "query_id,dx,dz,theta_deg,lat_err_m,lon_err_m,az_err_deg,iters,final_cost,wall_ms\n";
  for (const QueryResult& r : report.rows) {
    out << r.id << ',' << format_double(r.final_pose.dx()) << ',' << format_double(r.final_pose.dz())
        << ',' << format_double(to_deg(r.final_pose.theta())) << ',';
    if (r.error) {
      out << format_double(r.error->lateral) << ',' << format_double(r.error->longitudinal) << ','
          << format_double(r.error->azimuth);
    } else {
      out << ",,";
    }
    out << ',' << r.iterations << ',' << format_double(r.final_cost) << ',' << format_double(r.wall_ms)
        << '\n';
  }
  return out.str();
}

json report_to_json(const SolveReport& report) {
  json rows = json::array();
  for (const QueryResult& r : report.rows) {
    json row;
    row["query_id"] = r.id;
    row["dx"] = r.final_pose.dx();
    row["dz"] = r.final_pose.dz();
    row["theta_deg"] = to_deg(r.final_pose.theta());
    if (r.error) {
      row["lat_err_m"] = r.error->lateral;
      row["lon_err_m"] = r.error->longitudinal;
      row["az_err_deg"] = r.error->azimuth;
    } else {
      row["lat_err_m"] = nullptr;
      row["lon_err_m"] = nullptr;
      row["az_err_deg"] = nullptr;
    }
    row["iters"] = r.iterations;
    row["final_cost"] = r.final_cost;
    row["wall_ms"] = r.wall_ms;
    rows.push_back(std::move(row));
  }
  json doc;
  doc["rows"] = std::move(rows);
  if (report.aggregate) {
    doc["aggregate"] = {{"count", report.aggregate->count},
                        {"lateral", table_to_json(report.aggregate->lateral)},
                        {"longitudinal", table_to_json(report.aggregate->longitudinal)},
                        {"azimuth", table_to_json(report.aggregate->azimuth)}};
  }
  return doc;
}

void write_report(const SolveReport& report, const std::filesystem::path& out_dir, ReportFormat format) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (format != ReportFormat::kJson) {
    std::ofstream out(out_dir / "report.csv");
    if (!out) throw Error(ErrorCode::kIoFailure, "cannot write report.csv", out_dir.string());
    out << report_to_csv(report);
  }
  if (format != ReportFormat::kCsv) {
    std::ofstream out(out_dir / "report.json");
    if (!out) throw Error(ErrorCode::kIoFailure, "cannot write report.json", out_dir.string());
    out << report_to_json(report).dump(2) << '\n';
  }
}

}  // namespace crossview
