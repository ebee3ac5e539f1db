#pragma once

// Lateral / longitudinal / azimuth error decomposition and recall tables.

#include <array>
#include <span>
#include <vector>

#include "crossview/geometry.hpp"

namespace crossview {

/// Distance thresholds in meters, and azimuth thresholds in degrees.
inline constexpr std::array<double, 3> kDistanceThresholds{1.0, 3.0, 5.0};
inline constexpr std::array<double, 3> kAngleThresholds{1.0, 3.0, 5.0};

struct PoseError {
  double lateral = 0.0;       // m, perpendicular to the GT heading
  double longitudinal = 0.0;  // m, along the GT heading
  double azimuth = 0.0;       // degrees in [0, 180]
};

/// Wraps to (-180, 180].
double wrap_angle_deg(double delta);

/// Camera-center error in the world frame, expressed in the GT camera's
/// lateral / longitudinal axes.
PoseError decompose_error(const Pose3DoF& est, const Pose3DoF& gt);

/// 100 * |{err < threshold}| / N. Throws kInvalidArgument on empty input.
double recall(std::span<const double> errors, double threshold);

struct RecallTable {
  std::array<double, 3> thresholds{};
  std::array<double, 3> recall{};  // percent
  double mean = 0.0;               // extension: not part of the recall table proper
  double median = 0.0;             // extension
};

struct RecallReport {
  RecallTable lateral;
  RecallTable longitudinal;
  RecallTable azimuth;
  std::size_t count = 0;
};

/// Throws kInvalidArgument on empty input.
RecallReport aggregate_report(std::span<const PoseError> per_query);

}  // namespace crossview
