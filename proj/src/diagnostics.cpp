#include "crossview/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "crossview/error.hpp"
#include "crossview/sampler.hpp"

namespace crossview {

namespace {

struct PointSample {
  bool valid = false;
  int cell_x = 0;
  int cell_y = 0;
  std::vector<double> value;
};

PointSample sample_point(const PoseProjector& projector, const FeatureMap& sat,
                         const Eigen::Vector3d& p_c) {
  PointSample s;
  const SatellitePixel p = projector.project(p_c);
  if (!p.valid) return s;
  s.valid = true;
  s.cell_x = std::clamp(static_cast<int>(std::ceil(p.u)) - 1, 0, std::max(0, sat.width() - 2));
  s.cell_y = std::clamp(static_cast<int>(std::ceil(p.v)) - 1, 0, std::max(0, sat.height() - 2));
  s.value = bilinear_sample(sat.data, p.u, p.v);
  return s;
}

}  // namespace

JacobianCheck check_residual_jacobian(const Pose3DoF& pose, const LevelProblem& problem, double step) {
  const ResidualSystem sys = build_residual_system(pose, problem, true);
  const FeatureMap& sat = problem.satellite();
  const int channels = sat.channels();
  const PoseProjector center(pose, sat.satellite());
  std::vector<PoseProjector> plus, minus;
  for (int j = 0; j < 3; ++j) {
    Eigen::Vector3d d = Eigen::Vector3d::Zero();
    d[j] = step;
    plus.emplace_back(pose + d, sat.satellite());
    minus.emplace_back(pose + (-d), sat.satellite());
  }

  Eigen::Vector3d diff_smooth = Eigen::Vector3d::Zero(), ref_smooth = Eigen::Vector3d::Zero();
  Eigen::Vector3d diff_all = Eigen::Vector3d::Zero(), ref_all = Eigen::Vector3d::Zero();
  JacobianCheck out;
  Eigen::Index row = 0;
  for (const auto& pt : problem.ground_points()) {
    const PointSample c = sample_point(center, sat, pt.camera_point);
    if (!c.valid) continue;
    bool smooth = true;
    Eigen::Matrix<double, Eigen::Dynamic, 3> fd(channels, 3);
    for (int j = 0; j < 3; ++j) {
      const PointSample sp = sample_point(plus[j], sat, pt.camera_point);
      const PointSample sm = sample_point(minus[j], sat, pt.camera_point);
      if (!sp.valid || !sm.valid) {
        smooth = false;
        fd.col(j).setZero();
        continue;
      }
      if (sp.cell_x != c.cell_x || sp.cell_y != c.cell_y || sm.cell_x != c.cell_x ||
          sm.cell_y != c.cell_y) {
        smooth = false;
      }
      for (int k = 0; k < channels; ++k) fd(k, j) = (sp.value[k] - sm.value[k]) / (2.0 * step);
    }
    for (int k = 0; k < channels; ++k, ++row) {
      const Eigen::RowVector3d analytic = sys.J.row(row);
      const Eigen::RowVector3d numeric = fd.row(k);
      const Eigen::Vector3d d2 = (analytic - numeric).cwiseAbs2().transpose();
      const Eigen::Vector3d r2 = numeric.cwiseAbs2().transpose();
      diff_all += d2;
      ref_all += r2;
      if (smooth) {
        diff_smooth += d2;
        ref_smooth += r2;
      }
    }
    smooth ? ++out.rows_compared : ++out.rows_excluded;
  }
  for (int j = 0; j < 3; ++j) {
    if (ref_smooth[j] > 0.0) {
      out.max_rel_error = std::max(out.max_rel_error, std::sqrt(diff_smooth[j] / ref_smooth[j]));
    }
    if (ref_all[j] > 0.0) {
      out.max_rel_error_all_rows = std::max(out.max_rel_error_all_rows, std::sqrt(diff_all[j] / ref_all[j]));
    }
  }
  return out;
}

double check_pixel_jacobian(const Pose3DoF& pose, const CameraModel& cam, const SatelliteFrame& sat,
                            double u_g, double v_g, double step) {
  const Eigen::Matrix<double, 2, 3> analytic = jacobian_pixel_wrt_pose(pose, cam, sat, u_g, v_g);
  const Eigen::Vector3d p_c = backproject_ground_pixel(cam, u_g, v_g).camera_point();
  Eigen::Matrix<double, 2, 3> numeric;
  for (int j = 0; j < 3; ++j) {
    Eigen::Vector3d d = Eigen::Vector3d::Zero();
    d[j] = step;
    const SatellitePixel p = camera_point_to_satellite(pose + d, sat, p_c);
    const SatellitePixel m = camera_point_to_satellite(pose + (-d), sat, p_c);
    numeric(0, j) = (p.u - m.u) / (2.0 * step);
    numeric(1, j) = (p.v - m.v) / (2.0 * step);
  }
  return (analytic - numeric).cwiseAbs().maxCoeff() / numeric.cwiseAbs().maxCoeff();
}

double check_projection_roundtrip(const Pose3DoF& pose, const CameraModel& cam,
                                  const SatelliteFrame& sat, double u_g, double v_g) {
  const GroundRay ray = backproject_ground_pixel(cam, u_g, v_g);
  if (!ray.valid) throw Error(ErrorCode::kInvalidArgument, "round trip needs a ground pixel");
  const SatellitePixel p = camera_point_to_satellite(pose, sat, ray.camera_point());
  const Eigen::Vector2d back = satellite_to_ground(pose, cam, sat, p.u, p.v);
  return (back - Eigen::Vector2d{u_g, v_g}).norm();
}

int count_monotonicity_violations(const SolveTrace& trace) {
  int violations = 0;
  int level = -1, round = -1;
  double last = 0.0;
  for (const TraceStep& s : trace.steps) {
    if (!s.accepted) continue;
    if (!(s.cost_after <= s.cost_before)) ++violations;
    if (s.level == level && s.round == round && !(s.cost_after < last)) ++violations;
    level = s.level;
    round = s.round;
    last = s.cost_after;
  }
  return violations;
}

}  // namespace crossview
