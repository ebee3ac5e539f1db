#pragma once

// Bilinear sampling of satellite features at projected ground-pixel
// coordinates, with the exact derivative of the interpolant.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "crossview/features.hpp"
#include "crossview/geometry.hpp"
#include "crossview/image.hpp"

namespace crossview {

/// Requires 0 <= u <= W-1 and 0 <= v <= H-1 (u is the column); throws
/// kInvalidArgument otherwise. `out` must hold channels() values.
void bilinear_sample(const Image& map, double u, double v, std::span<double> out);
std::vector<double> bilinear_sample(const Image& map, double u, double v);

/// Value and per-channel derivatives along u and v. On grid lines the
/// derivative of the lower-index cell is returned.
void bilinear_sample_with_gradient(const Image& map, double u, double v,
                                   std::span<double> value, std::span<double> du,
                                   std::span<double> dv);

struct BilinearGradient {
  std::vector<double> du;
  std::vector<double> dv;
};
BilinearGradient bilinear_gradient(const Image& map, double u, double v);

/// Satellite features resampled into ground-view geometry. Masked pixels
/// carry exact zeros.
struct ProjectedFeatures {
  Image features;
  std::vector<std::uint8_t> mask;          // row-major over ground pixels
  std::vector<Eigen::Vector2d> coords;     // (u_s, v_s) per ground pixel

  bool valid(int x, int y) const { return mask[static_cast<std::size_t>(y) * features.width() + x] != 0; }
  std::size_t valid_count() const;
};

/// `cam` is the ground camera at `ground_level`; throws kLevelMismatch when
/// the satellite map belongs to another level.
ProjectedFeatures project_features(const FeatureMap& sat, const Pose3DoF& pose,
                                   const CameraModel& cam, int ground_level);

/// Convenience overload taking camera and level from a ground feature map.
ProjectedFeatures project_features(const FeatureMap& sat, const Pose3DoF& pose,
                                   const FeatureMap& ground);

}  // namespace crossview
