#pragma once
// Shared helpers for tests: rendered synthetic queries with their pyramids.
#include <cmath>

#include <Eigen/Core>
#include <Eigen/LU>

#include "crossview/features.hpp"
#include "crossview/geometry.hpp"
#include "crossview/solver.hpp"
#include "crossview/synth.hpp"

namespace crossview::testing {

struct PreparedTrial {
  SynthScene scene;
  RenderedView view;
  FeaturePyramid satellite;
  FeaturePyramid ground;
  Pose3DoF init_pose;
};

inline PreparedTrial prepare(const Trial& trial, int supersample = 1) {
  const Rgb3Extractor extractor;
  PreparedTrial p{build_scene(trial.scene), {}, {}, {}, trial.init_pose};
  p.view = render_ground_view(p.scene, supersample);
  p.satellite = extract_pyramid(p.scene.satellite, extractor, p.scene.sat_frame);
  p.ground = extract_pyramid(p.view.image, extractor, p.scene.camera());
  return p;
}

// Independent ground -> satellite mapping: K^-1 back-projection onto the plane
// y = h, the rigid map R (p + t), then the orthographic raster map.
inline Eigen::Vector2d reference_ground_to_satellite(const Pose3DoF& pose, const CameraModel& cam,
                                                     const SatelliteFrame& sat, double u, double v) {
  Eigen::Matrix3d K;
  K << cam.fx, 0, cam.cx, 0, cam.fy, cam.cy, 0, 0, 1;
  const Eigen::Vector3d ray = K.inverse() * Eigen::Vector3d(u, v, 1.0);
  const Eigen::Vector3d p_c = (cam.height_m / ray.y()) * ray;
  const double c = std::cos(pose.theta());
  const double s = std::sin(pose.theta());
  Eigen::Matrix3d R;
  R << c, 0, s, 0, 1, 0, -s, 0, c;
  const Eigen::Vector3d p_w = R * (p_c + Eigen::Vector3d(pose.dx(), 0.0, pose.dz()));
  return {p_w.z() / sat.alpha + sat.u0, p_w.x() / sat.alpha + sat.v0};
}

inline bool within(const Pose3DoF& est, const Pose3DoF& gt, double meters, double degrees) {
  // Camera-center error along the GT camera's right and forward axes.
  const Eigen::Vector2d d = est.camera_center() - gt.camera_center();
  const double c = std::cos(gt.theta());
  const double s = std::sin(gt.theta());
  const double lateral = c * d.x() - s * d.y();
  const double longitudinal = s * d.x() + c * d.y();
  const double az = std::abs(wrap_angle_rad(est.theta() - gt.theta())) * 180.0 / kPi;
  return std::abs(lateral) < meters && std::abs(longitudinal) < meters && az < degrees;
}

}  // namespace crossview::testing
