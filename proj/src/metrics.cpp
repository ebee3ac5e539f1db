#include "crossview/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crossview/error.hpp"

namespace crossview {

double wrap_angle_deg(double delta) {
  if (delta > -180.0 && delta <= 180.0) return delta;
  double r = std::fmod(delta + 180.0, 360.0);
  if (r <= 0.0) r += 360.0;
  return r - 180.0;
}

PoseError decompose_error(const Pose3DoF& est, const Pose3DoF& gt) {
  const Eigen::Vector2d d = est.camera_center() - gt.camera_center();  // world (x, z)
  const double c = std::cos(gt.theta());
  const double s = std::sin(gt.theta());
  // R(theta_gt)^T applied to (d.x, 0, d.z): camera x is lateral, camera z longitudinal.
  PoseError err;
  err.lateral = std::abs(c * d.x() - s * d.y());
  err.longitudinal = std::abs(s * d.x() + c * d.y());
  err.azimuth = std::abs(wrap_angle_deg((est.theta() - gt.theta()) * 180.0 / kPi));
  return err;
}

double recall(std::span<const double> errors, double threshold) {
  if (errors.empty()) throw Error(ErrorCode::kInvalidArgument, "recall of an empty error list");
  const auto hits = std::count_if(errors.begin(), errors.end(),
                                  [threshold](double e) { return e < threshold; });
  return 100.0 * static_cast<double>(hits) / static_cast<double>(errors.size());
}

namespace {

RecallTable make_table(std::vector<double> errors, const std::array<double, 3>& thresholds) {
  RecallTable table;
  table.thresholds = thresholds;
  for (std::size_t i = 0; i < thresholds.size(); ++i) table.recall[i] = recall(errors, thresholds[i]);
  table.mean = std::accumulate(errors.begin(), errors.end(), 0.0) / errors.size();
  std::sort(errors.begin(), errors.end());
  const std::size_t n = errors.size();
  table.median = n % 2 == 1 ? errors[n / 2] : 0.5 * (errors[n / 2 - 1] + errors[n / 2]);
  return table;
}

}  // namespace

RecallReport aggregate_report(std::span<const PoseError> per_query) {
  if (per_query.empty()) throw Error(ErrorCode::kInvalidArgument, "aggregate of an empty query list");
  std::vector<double> lat, lon, az;
  for (const PoseError& e : per_query) {
    lat.push_back(e.lateral);
    lon.push_back(e.longitudinal);
    az.push_back(e.azimuth);
  }
  RecallReport report;
  report.count = per_query.size();
  report.lateral = make_table(std::move(lat), kDistanceThresholds);
  report.longitudinal = make_table(std::move(lon), kDistanceThresholds);
  report.azimuth = make_table(std::move(az), kAngleThresholds);
  return report;
}

}  // namespace crossview
