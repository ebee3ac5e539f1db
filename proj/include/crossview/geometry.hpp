#pragma once

// Ground camera / satellite raster geometry.
//
// World frame: origin at the satellite feature-map center, x along the
// satellite row axis (v_s), y pointing down, z along the satellite column
// axis (u_s). Camera frame: x right, y down, z forward. A camera point p_c
// maps to the world as R(theta) * (p_c + t) with t = (dx, 0, dz), so t is an
// offset expressed in the camera frame and the camera center sits at R * t.

#include <Eigen/Core>

namespace crossview {

constexpr double kPi = 3.14159265358979323846;

/// Rays with a y-component at or below this are treated as horizon/sky.
constexpr double kHorizonEpsilon = 1e-3;
/// Ground points farther than this from the camera (meters) are ignored.
constexpr double kMaxGroundRange = 100.0;

/// Wraps to (-pi, pi].
double wrap_angle_rad(double angle);

class Pose3DoF {
 public:
  Pose3DoF() = default;
  /// Throws kInvalidArgument on non-finite input; theta is wrapped.
  Pose3DoF(double dx, double dz, double theta);

  /// Pose whose camera center lies at world (x, z) with heading theta.
  static Pose3DoF from_camera_center(double x, double z, double theta);

  double dx() const { return dx_; }
  double dz() const { return dz_; }
  double theta() const { return theta_; }

  /// World (x, z) of the camera center.
  Eigen::Vector2d camera_center() const;

  Eigen::Vector3d as_vector() const { return {dx_, dz_, theta_}; }

  /// Additive update in parameter space, theta re-wrapped.
  Pose3DoF operator+(const Eigen::Vector3d& delta) const {
    return {dx_ + delta.x(), dz_ + delta.y(), theta_ + delta.z()};
  }

  bool operator==(const Pose3DoF&) const = default;

 private:
  double dx_ = 0.0;
  double dz_ = 0.0;
  double theta_ = 0.0;
};

/// Pin-hole ground camera plus its height above the ground plane.
struct CameraModel {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  double height_m = 0.0;
  int width = 0;
  int height = 0;

  /// Throws kInvalidArgument when an invariant is violated.
  void validate() const;

  /// Intrinsics for feature level l (image scaled by 1 / 2^(4-l)).
  CameraModel at_level(int level) const;
};

/// Orthographic satellite raster geometry.
struct SatelliteFrame {
  double alpha = 0.0;  // meters per pixel
  double u0 = 0.0;
  double v0 = 0.0;
  int width = 0;
  int height = 0;

  /// Frame with the center at ((W-1)/2, (H-1)/2).
  static SatelliteFrame centered(double alpha, int width, int height);

  void validate() const;
  SatelliteFrame at_level(int level) const;
};

/// Downsample factor 2^(4-l) of feature level l in {1, 2, 3}.
int level_downsample_factor(int level);

/// Maps a pixel-center coordinate of the full-resolution raster to the
/// matching coordinate after downsampling by `factor`.
inline double scale_pixel_coordinate(double coord, int factor) {
  return (coord + 0.5) / factor - 0.5;
}

struct RigidTransform {
  Eigen::Matrix3d rotation;
  Eigen::Vector3d translation;
};

/// R(theta) is a yaw about the world down-axis with R(0) = I;
/// translation is (dx, 0, dz).
RigidTransform pose_to_rt(const Pose3DoF& pose);

/// Back-projection of one ground pixel onto the ground plane.
struct GroundRay {
  Eigen::Vector3d ray = Eigen::Vector3d::Zero();  // K^-1 [u, v, 1]^T
  double w = 0.0;                                  // depth scale along ray
  bool valid = false;

  Eigen::Vector3d camera_point() const { return w * ray; }
};

/// Pixel must lie in [-0.5, W-0.5) x [-0.5, H-0.5); throws otherwise.
/// Pixels at or above the horizon, or beyond kMaxGroundRange, come back
/// with valid == false.
GroundRay backproject_ground_pixel(const CameraModel& cam, double u, double v);

struct SatellitePixel {
  double u = 0.0;
  double v = 0.0;
  bool valid = false;
};

/// World-frame point of a camera-frame point under `pose`.
Eigen::Vector3d camera_to_world(const Pose3DoF& pose, const Eigen::Vector3d& p_c);

/// Satellite pixel of a camera-frame ground point; valid iff it lands in
/// [0, W-1] x [0, H-1].
SatellitePixel camera_point_to_satellite(const Pose3DoF& pose, const SatelliteFrame& sat,
                                         const Eigen::Vector3d& p_c);

SatellitePixel ground_to_satellite(const Pose3DoF& pose, const CameraModel& cam,
                                   const SatelliteFrame& sat, double u_g, double v_g);

/// Inverse of ground_to_satellite for a satellite pixel on the ground plane:
/// returns the ground-image pixel (u_g, v_g). Throws kInvalidArgument when the
/// point lies behind the camera.
Eigen::Vector2d satellite_to_ground(const Pose3DoF& pose, const CameraModel& cam,
                                    const SatelliteFrame& sat, double u_s, double v_s);

/// Pose and satellite frame with the yaw trigonometry evaluated once, for
/// mapping many camera points under the same pose.
class PoseProjector {
 public:
  PoseProjector(const Pose3DoF& pose, const SatelliteFrame& sat);

  Eigen::Vector3d to_world(const Eigen::Vector3d& p_c) const;
  SatellitePixel project(const Eigen::Vector3d& p_c) const;
  Eigen::Matrix<double, 2, 3> jacobian(const Eigen::Vector3d& p_c) const;

 private:
  Pose3DoF pose_;
  SatelliteFrame sat_;
  double cos_;
  double sin_;
};

/// d(u_s, v_s) / d(dx, dz, theta) for a fixed camera-frame ground point.
Eigen::Matrix<double, 2, 3> jacobian_camera_point_wrt_pose(const Pose3DoF& pose,
                                                           const SatelliteFrame& sat,
                                                           const Eigen::Vector3d& p_c);

/// Throws kInvalidArgument if the pixel does not back-project onto the ground.
Eigen::Matrix<double, 2, 3> jacobian_pixel_wrt_pose(const Pose3DoF& pose,
                                                    const CameraModel& cam,
                                                    const SatelliteFrame& sat, double u_g,
                                                    double v_g);

}  // namespace crossview
