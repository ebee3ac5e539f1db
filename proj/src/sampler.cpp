#include "crossview/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "crossview/error.hpp"

namespace crossview {

namespace {

struct Cell {
  int x0;
  int y0;
  double fu;
  double fv;
};

// Cell whose closed extent contains (u, v); ties go to the lower index.
Cell locate(const Image& map, double u, double v) {
  if (!(u >= 0.0 && u <= map.width() - 1 && v >= 0.0 && v <= map.height() - 1)) {
    throw Error(ErrorCode::kInvalidArgument, "bilinear sample outside the map");
  }
  const int max_x = std::max(0, map.width() - 2);
  const int max_y = std::max(0, map.height() - 2);
  const int x0 = std::clamp(static_cast<int>(std::ceil(u)) - 1, 0, max_x);
  const int y0 = std::clamp(static_cast<int>(std::ceil(v)) - 1, 0, max_y);
  return {x0, y0, u - x0, v - y0};
}

}  // namespace

void bilinear_sample(const Image& map, double u, double v, std::span<double> out) {
  const Cell cell = locate(map, u, v);
  const int x1 = std::min(cell.x0 + 1, map.width() - 1);
  const int y1 = std::min(cell.y0 + 1, map.height() - 1);
  const auto p00 = map.pixel(cell.x0, cell.y0);
  const auto p10 = map.pixel(x1, cell.y0);
  const auto p01 = map.pixel(cell.x0, y1);
  const auto p11 = map.pixel(x1, y1);
  const double a = cell.fu;
  const double b = cell.fv;
  for (int k = 0; k < map.channels(); ++k) {
    out[k] = (1 - a) * (1 - b) * p00[k] + a * (1 - b) * p10[k] + (1 - a) * b * p01[k] +
             a * b * p11[k];
  }
}

std::vector<double> bilinear_sample(const Image& map, double u, double v) {
  std::vector<double> out(map.channels());
  bilinear_sample(map, u, v, out);
  return out;
}

void bilinear_sample_with_gradient(const Image& map, double u, double v,
                                   std::span<double> value, std::span<double> du,
                                   std::span<double> dv) {
  const Cell cell = locate(map, u, v);
  const int x1 = std::min(cell.x0 + 1, map.width() - 1);
  const int y1 = std::min(cell.y0 + 1, map.height() - 1);
  const auto p00 = map.pixel(cell.x0, cell.y0);
  const auto p10 = map.pixel(x1, cell.y0);
  const auto p01 = map.pixel(cell.x0, y1);
  const auto p11 = map.pixel(x1, y1);
  const double a = cell.fu;
  const double b = cell.fv;
  for (int k = 0; k < map.channels(); ++k) {
    const double top = p10[k] - p00[k];
    const double bottom = p11[k] - p01[k];
    value[k] = (1 - a) * (1 - b) * p00[k] + a * (1 - b) * p10[k] + (1 - a) * b * p01[k] +
               a * b * p11[k];
    du[k] = (1 - b) * top + b * bottom;
    dv[k] = (1 - a) * (p01[k] - p00[k]) + a * (p11[k] - p10[k]);
  }
}

BilinearGradient bilinear_gradient(const Image& map, double u, double v) {
  std::vector<double> value(map.channels());
  BilinearGradient g{std::vector<double>(map.channels()), std::vector<double>(map.channels())};
  bilinear_sample_with_gradient(map, u, v, value, g.du, g.dv);
  return g;
}

std::size_t ProjectedFeatures::valid_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

ProjectedFeatures project_features(const FeatureMap& sat, const Pose3DoF& pose,
                                   const CameraModel& cam, int ground_level) {
  if (sat.level != ground_level) {
    throw Error(ErrorCode::kLevelMismatch, "satellite level " + std::to_string(sat.level) +
                                                " does not match ground level " +
                                                std::to_string(ground_level));
  }
  const SatelliteFrame& frame = sat.satellite();
  ProjectedFeatures out;
  out.features = Image(cam.width, cam.height, sat.channels());
  out.mask.assign(static_cast<std::size_t>(cam.width) * cam.height, 0);
  out.coords.assign(out.mask.size(), Eigen::Vector2d::Zero());
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * cam.width + x;
      const SatellitePixel p = ground_to_satellite(pose, cam, frame, x, y);
      out.coords[i] = {p.u, p.v};
      if (!p.valid) continue;
      out.mask[i] = 1;
      bilinear_sample(sat.data, p.u, p.v, out.features.pixel(x, y));
    }
  }
  return out;
}

ProjectedFeatures project_features(const FeatureMap& sat, const Pose3DoF& pose,
                                   const FeatureMap& ground) {
  return project_features(sat, pose, ground.camera(), ground.level);
}

}  // namespace crossview
