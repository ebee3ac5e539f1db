#include "crossview/geometry.hpp"

#include <cmath>
#include <string>

#include "crossview/error.hpp"

namespace crossview {

double wrap_angle_rad(double angle) {
  if (angle > -kPi && angle <= kPi) return angle;
  double r = std::fmod(angle + kPi, 2.0 * kPi);
  if (r <= 0.0) r += 2.0 * kPi;
  return r - kPi;
}

Pose3DoF::Pose3DoF(double dx, double dz, double theta) {
  if (!std::isfinite(dx) || !std::isfinite(dz) || !std::isfinite(theta)) {
    throw Error(ErrorCode::kInvalidArgument, "pose components must be finite");
  }
  dx_ = dx;
  dz_ = dz;
  theta_ = wrap_angle_rad(theta);
}

Pose3DoF Pose3DoF::from_camera_center(double x, double z, double theta) {
  // center = R t  =>  t = R^T center
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {c * x - s * z, s * x + c * z, theta};
}

Eigen::Vector2d Pose3DoF::camera_center() const {
  const double c = std::cos(theta_);
  const double s = std::sin(theta_);
  return {c * dx_ + s * dz_, -s * dx_ + c * dz_};
}

void CameraModel::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "camera focal lengths must be positive");
  }
  if (!(height_m > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "camera height must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "camera image size must be positive");
  }
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
    throw Error(ErrorCode::kInvalidArgument, "principal point outside the image");
  }
}

int level_downsample_factor(int level) {
  if (level < 1 || level > 3) {
    throw Error(ErrorCode::kInvalidArgument,
                "feature level must be 1, 2 or 3 (got " + std::to_string(level) + ")");
  }
  return 1 << (4 - level);
}

CameraModel CameraModel::at_level(int level) const {
  const int f = level_downsample_factor(level);
  CameraModel out = *this;
  out.fx = fx / f;
  out.fy = fy / f;
  out.cx = scale_pixel_coordinate(cx, f);
  out.cy = scale_pixel_coordinate(cy, f);
  out.width = width / f;
  out.height = height / f;
  return out;
}

SatelliteFrame SatelliteFrame::centered(double alpha, int width, int height) {
  return {alpha, (width - 1) / 2.0, (height - 1) / 2.0, width, height};
}

void SatelliteFrame::validate() const {
  if (!(alpha > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "meters per pixel must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "satellite size must be positive");
  }
  if (!(u0 >= 0.0 && u0 < width && v0 >= 0.0 && v0 < height)) {
    throw Error(ErrorCode::kInvalidArgument, "satellite center outside the raster");
  }
}

SatelliteFrame SatelliteFrame::at_level(int level) const {
  const int f = level_downsample_factor(level);
  return {alpha * f, scale_pixel_coordinate(u0, f), scale_pixel_coordinate(v0, f), width / f,
          height / f};
}

RigidTransform pose_to_rt(const Pose3DoF& pose) {
  const double c = std::cos(pose.theta());
  const double s = std::sin(pose.theta());
  RigidTransform rt;
  rt.rotation << c, 0.0, s,  //
      0.0, 1.0, 0.0,         //
      -s, 0.0, c;
  rt.translation = {pose.dx(), 0.0, pose.dz()};
  return rt;
}

GroundRay backproject_ground_pixel(const CameraModel& cam, double u, double v) {
  if (!(u >= -0.5 && u < cam.width - 0.5 && v >= -0.5 && v < cam.height - 0.5)) {
    throw Error(ErrorCode::kInvalidArgument, "ground pixel outside the image");
  }
  GroundRay out;
  out.ray = {(u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0};
  if (out.ray.y() <= kHorizonEpsilon) return out;
  const double w = cam.height_m / out.ray.y();
  if (w * out.ray.norm() > kMaxGroundRange) return out;
  out.w = w;
  out.valid = true;
  return out;
}

PoseProjector::PoseProjector(const Pose3DoF& pose, const SatelliteFrame& sat)
    : pose_(pose), sat_(sat), cos_(std::cos(pose.theta())), sin_(std::sin(pose.theta())) {}

Eigen::Vector3d PoseProjector::to_world(const Eigen::Vector3d& p_c) const {
  const double qx = p_c.x() + pose_.dx();
  const double qz = p_c.z() + pose_.dz();
  return {cos_ * qx + sin_ * qz, p_c.y(), -sin_ * qx + cos_ * qz};
}

SatellitePixel PoseProjector::project(const Eigen::Vector3d& p_c) const {
  const Eigen::Vector3d world = to_world(p_c);
  SatellitePixel out;
  out.u = world.z() / sat_.alpha + sat_.u0;
  out.v = world.x() / sat_.alpha + sat_.v0;
  out.valid =
      out.u >= 0.0 && out.u <= sat_.width - 1 && out.v >= 0.0 && out.v <= sat_.height - 1;
  return out;
}

Eigen::Matrix<double, 2, 3> PoseProjector::jacobian(const Eigen::Vector3d& p_c) const {
  const Eigen::Vector3d world = to_world(p_c);
  // x = c qx + s qz, z = -s qx + c qz; dx/dtheta = z, dz/dtheta = -x.
  Eigen::Matrix<double, 2, 3> jac;
  jac << -sin_, cos_, -world.x(),  //
      cos_, sin_, world.z();
  return jac / sat_.alpha;
}

Eigen::Vector3d camera_to_world(const Pose3DoF& pose, const Eigen::Vector3d& p_c) {
  return PoseProjector(pose, SatelliteFrame{1.0, 0.0, 0.0, 1, 1}).to_world(p_c);
}

SatellitePixel camera_point_to_satellite(const Pose3DoF& pose, const SatelliteFrame& sat,
                                         const Eigen::Vector3d& p_c) {
  return PoseProjector(pose, sat).project(p_c);
}

SatellitePixel ground_to_satellite(const Pose3DoF& pose, const CameraModel& cam,
                                   const SatelliteFrame& sat, double u_g, double v_g) {
  const GroundRay ray = backproject_ground_pixel(cam, u_g, v_g);
  if (!ray.valid) return {};
  return camera_point_to_satellite(pose, sat, ray.camera_point());
}

Eigen::Vector2d satellite_to_ground(const Pose3DoF& pose, const CameraModel& cam,
                                    const SatelliteFrame& sat, double u_s, double v_s) {
  const Eigen::Vector3d world{(v_s - sat.v0) * sat.alpha, cam.height_m, (u_s - sat.u0) * sat.alpha};
  const RigidTransform rt = pose_to_rt(pose);
  const Eigen::Vector3d p_c = rt.rotation.transpose() * world - rt.translation;
  if (!(p_c.z() > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "satellite point lies behind the ground camera");
  }
  return {cam.fx * p_c.x() / p_c.z() + cam.cx, cam.fy * p_c.y() / p_c.z() + cam.cy};
}

Eigen::Matrix<double, 2, 3> jacobian_camera_point_wrt_pose(const Pose3DoF& pose,
                                                           const SatelliteFrame& sat,
                                                           const Eigen::Vector3d& p_c) {
  return PoseProjector(pose, sat).jacobian(p_c);
}

Eigen::Matrix<double, 2, 3> jacobian_pixel_wrt_pose(const Pose3DoF& pose,
                                                    const CameraModel& cam,
                                                    const SatelliteFrame& sat, double u_g,
                                                    double v_g) {
  const GroundRay ray = backproject_ground_pixel(cam, u_g, v_g);
  if (!ray.valid) {
    throw Error(ErrorCode::kInvalidArgument, "ground pixel does not reach the ground plane");
  }
  return jacobian_camera_point_wrt_pose(pose, sat, ray.camera_point());
}

}  // namespace crossview
