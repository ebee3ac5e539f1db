#pragma once

// Synthetic scenes with known ground truth: procedural satellite textures
// and ground views rendered through the same ground-plane mapping the solver
// inverts.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crossview/geometry.hpp"
#include "crossview/image.hpp"

namespace crossview {

enum class TextureStyle { kNoise, kRoadGrid, kBlobs };

std::string_view to_string(TextureStyle style);
/// "noise", "road-grid" or "blobs"; throws kInvalidArgument otherwise.
TextureStyle parse_texture_style(std::string_view name);

/// 256x1024 ground view, fx = fy = 256, centered principal point, 1.65 m.
CameraModel default_synth_camera();

/// Deterministic RGB texture in [0, 1]. "road-grid" roads run along the
/// u (column) axis, i.e. along heading theta = 0, with sparse cross streets.
Image make_satellite_texture(std::uint64_t seed, TextureStyle style, int size = 512);

/// Everything needed to rebuild a scene; cheap to copy.
struct SceneSpec {
  std::uint64_t seed = 0;
  TextureStyle style = TextureStyle::kNoise;
  int satellite_size = 512;
  double alpha = 0.20;
  // Texture generated past each tile edge so the ground camera keeps seeing
  // ground beyond the satellite crop, out to kMaxGroundRange from any pose in
  // the search region.
  int world_margin_px = 400;
  CameraModel camera = default_synth_camera();
  Pose3DoF gt_pose;
};

struct SynthScene {
  SceneSpec spec;
  Image world;               // tile plus margin, same origin and scale
  SatelliteFrame world_frame;
  Image satellite;           // center crop of `world`
  SatelliteFrame sat_frame;

  const CameraModel& camera() const { return spec.camera; }
  const Pose3DoF& gt_pose() const { return spec.gt_pose; }
};

SynthScene build_scene(const SceneSpec& spec);

struct RenderedView {
  Image image;
  std::vector<std::uint8_t> mask;  // 1 where the pixel center sees the tile
  std::size_t valid_count() const;
};

/// Samples `satellite` at every ground pixel's projection under `pose`.
/// Pixels that miss the tile (sky, out of range, off-tile) get `fill`.
/// `supersample` s > 1 averages an s x s grid of sub-pixel rays.
RenderedView render_ground_view(const Image& satellite, const SatelliteFrame& frame,
                                const CameraModel& cam, const Pose3DoF& pose,
                                std::span<const double> fill, int supersample = 1);

/// Renders the scene's world texture at its GT pose, sky filled with the
/// texture mean.
/// Throws kDegenerateView if no pixel sees the tile.
RenderedView render_ground_view(const SynthScene& scene, int supersample = 1);

struct TrialSetOptions {
  TextureStyle style = TextureStyle::kNoise;
  double init_radius_m = 20.0;
  double init_angle_deg = 20.0;
  double region_m = 40.0;              // GT camera centers lie in this square
  double gt_heading_range_deg = 180.0; // GT heading uniform in +-range
};

struct Trial {
  SceneSpec scene;
  Pose3DoF init_pose;
};

/// n reproducible trials, each with its own texture seed. init_pose is the GT
/// pose plus uniform offsets in [-r, r]^2 x [-a, a] in (dx, dz, theta).
std::vector<Trial> make_trial_set(int n, std::uint64_t seed, const TrialSetOptions& options = {});

/// Deterministic 64-bit generator, identical across standard libraries.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  double normal();

 private:
  std::uint64_t state_;
};

}  // namespace crossview
