#pragma once

// Numerical self-checks reported by `crossview check`.

#include <cstddef>

#include "crossview/geometry.hpp"
#include "crossview/solver.hpp"

namespace crossview {

struct JacobianCheck {
  /// max over pose columns of ||J - J_fd|| / ||J_fd||, restricted to rows
  /// whose bilinear cell and mask agree at pose +- step (where the residual
  /// is differentiable).
  double max_rel_error = 0.0;
  /// Same over every row, including cell-boundary crossings.
  double max_rel_error_all_rows = 0.0;
  std::size_t rows_compared = 0;
  std::size_t rows_excluded = 0;
};

/// Central differences of the rebuilt residual against the analytic stacked
/// Jacobian of build_residual_system.
JacobianCheck check_residual_jacobian(const Pose3DoF& pose, const LevelProblem& problem,
                                      double step = 1e-4);

/// max |J - J_fd| / max |J_fd| for jacobian_pixel_wrt_pose at one pixel.
double check_pixel_jacobian(const Pose3DoF& pose, const CameraModel& cam, const SatelliteFrame& sat,
                            double u_g, double v_g, double step = 1e-5);

/// |satellite_to_ground(ground_to_satellite(p)) - p| in ground pixels.
double check_projection_roundtrip(const Pose3DoF& pose, const CameraModel& cam,
                                  const SatelliteFrame& sat, double u_g, double v_g);

/// Accepted steps that failed to decrease the cost, plus accepted-cost
/// sequences within a level that are not strictly decreasing.
int count_monotonicity_violations(const SolveTrace& trace);

}  // namespace crossview
