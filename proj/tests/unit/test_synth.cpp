#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "crossview/error.hpp"
#include "crossview/features.hpp"
#include "crossview/sampler.hpp"
#include "crossview/synth.hpp"
#include "../support/fixture.hpp"

using namespace crossview;

TEST(Texture, SameSeedIsIdenticalOtherSeedIsNot) {
  for (TextureStyle style : {TextureStyle::kNoise, TextureStyle::kRoadGrid, TextureStyle::kBlobs}) {
    const Image a = make_satellite_texture(12, style, 256);
    const Image b = make_satellite_texture(12, style, 256);
    const Image c = make_satellite_texture(13, style, 256);
    EXPECT_EQ(a.data(), b.data()) << to_string(style);
    EXPECT_NE(a.data(), c.data()) << to_string(style);
    EXPECT_EQ(a.width(), 256);
    EXPECT_EQ(a.channels(), 3);
    for (double v : a.data()) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
  }
}

TEST(Texture, NoiseHasDenseGradients) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Image gray = to_grayscale(make_satellite_texture(seed, TextureStyle::kNoise));
    const Image gx = sobel_x(gray);
    const Image gy = sobel_y(gray);
    std::size_t nonzero = 0, total = 0;
    for (int y = 1; y + 1 < gray.height(); ++y) {
      for (int x = 1; x + 1 < gray.width(); ++x) {
        const double e = gx.at(x, y) * gx.at(x, y) + gy.at(x, y) * gy.at(x, y);
        nonzero += e > 1e-12;
        ++total;
      }
    }
    EXPECT_GT(static_cast<double>(nonzero) / total, 0.95) << "seed " << seed;
  }
}

TEST(Texture, StyleNames) {
  EXPECT_EQ(parse_texture_style("road-grid"), TextureStyle::kRoadGrid);
  EXPECT_EQ(to_string(parse_texture_style("blobs")), "blobs");
  EXPECT_EQ(to_string(TextureStyle::kNoise), "noise");
  EXPECT_THROW(parse_texture_style("grass"), Error);
}

TEST(Scene, SatelliteIsCenterCropOfWorld) {
  SceneSpec spec;
  spec.seed = 4;
  const SynthScene s = build_scene(spec);
  const int m = spec.world_margin_px;
  ASSERT_EQ(s.satellite.width(), 512);
  ASSERT_EQ(s.world.width(), 512 + 2 * m);
  for (int y = 0; y < 512; y += 37)
    for (int x = 0; x < 512; x += 41)
      for (int c = 0; c < 3; ++c) EXPECT_EQ(s.satellite.at(x, y, c), s.world.at(x + m, y + m, c));
  EXPECT_DOUBLE_EQ(s.world_frame.alpha, s.sat_frame.alpha);
  EXPECT_DOUBLE_EQ(s.world_frame.u0, s.sat_frame.u0 + m);
  EXPECT_DOUBLE_EQ(s.world_frame.v0, s.sat_frame.v0 + m);
}

TEST(Render, ConstantSatelliteGivesConstantGround) {
  const Image sat(128, 128, 3, 0.35);
  const SatelliteFrame frame = SatelliteFrame::centered(0.2, 128, 128);
  const CameraModel cam = default_synth_camera();
  const std::vector<double> fill{0.9, 0.9, 0.9};
  const RenderedView view = render_ground_view(sat, frame, cam, Pose3DoF(), fill);
  ASSERT_GT(view.valid_count(), 0u);
  ASSERT_LT(view.valid_count(), view.mask.size());
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const bool seen = view.mask[static_cast<std::size_t>(y) * cam.width + x];
      const double expect = seen ? 0.35 : 0.9;
      for (int c = 0; c < 3; ++c) ASSERT_NEAR(view.image.at(x, y, c), expect, 1e-12);
      // Nothing at or above the horizon row sees the ground.
      if (y <= cam.cy) ASSERT_FALSE(seen);
    }
  }
}

TEST(Render, MaskMatchesGroundToSatelliteValidity) {
  SceneSpec spec;
  spec.seed = 6;
  spec.gt_pose = Pose3DoF::from_camera_center(3.0, -7.0, 0.8);
  const SynthScene s = build_scene(spec);
  const RenderedView view = render_ground_view(s);
  const CameraModel& cam = s.camera();
  for (int y = 0; y < cam.height; y += 3) {
    for (int x = 0; x < cam.width; x += 5) {
      const bool valid = ground_to_satellite(s.gt_pose(), cam, s.sat_frame, x, y).valid;
      EXPECT_EQ(view.mask[static_cast<std::size_t>(y) * cam.width + x] != 0, valid);
    }
  }
}

TEST(Render, RoadGridHalfTurnDiffers) {
  SceneSpec spec;
  spec.seed = 8;
  spec.style = TextureStyle::kRoadGrid;
  SynthScene s = build_scene(spec);
  const Image a = render_ground_view(s).image;
  s.spec.gt_pose = Pose3DoF(0, 0, kPi);
  const Image b = render_ground_view(s).image;
  double mad = 0;
  for (std::size_t i = 0; i < a.data().size(); ++i) mad += std::abs(a.data()[i] - b.data()[i]);
  EXPECT_GT(mad / a.data().size(), 0.0);
}

TEST(Render, DegenerateViewThrows) {
  SceneSpec spec;
  spec.gt_pose = Pose3DoF::from_camera_center(1000.0, 0.0, 0.0);  // tile out of range
  try {
    render_ground_view(build_scene(spec));
    FAIL() << "expected a degenerate view";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateView);
  }
}

TEST(Render, Deterministic) {
  SceneSpec spec;
  spec.seed = 10;
  spec.gt_pose = Pose3DoF(1, 2, 0.3);
  const RenderedView a = render_ground_view(build_scene(spec), 2);
  const RenderedView b = render_ground_view(build_scene(spec), 2);
  EXPECT_EQ(a.image.data(), b.image.data());
  EXPECT_EQ(a.mask, b.mask);
}

TEST(TrialSet, ZeroRadiusGivesGroundTruthInit) {
  TrialSetOptions opts;
  opts.init_radius_m = 0.0;
  opts.init_angle_deg = 0.0;
  const auto trials = make_trial_set(1, 3, opts);
  ASSERT_EQ(trials.size(), 1u);
  EXPECT_EQ(trials[0].init_pose, trials[0].scene.gt_pose);
}

TEST(TrialSet, ReproducibleAndInsideRegion) {
  const auto a = make_trial_set(200, 17);
  const auto b = make_trial_set(200, 17);
  ASSERT_EQ(a.size(), 200u);
  double max_off = 0, max_ang = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].scene.seed, b[i].scene.seed);
    EXPECT_EQ(a[i].scene.gt_pose, b[i].scene.gt_pose);
    EXPECT_EQ(a[i].init_pose, b[i].init_pose);
    const Eigen::Vector2d c = a[i].scene.gt_pose.camera_center();
    EXPECT_LE(std::abs(c.x()), 20.0);
    EXPECT_LE(std::abs(c.y()), 20.0);
    const Eigen::Vector3d d = a[i].init_pose.as_vector() - a[i].scene.gt_pose.as_vector();
    max_off = std::max({max_off, std::abs(d.x()), std::abs(d.y())});
    max_ang = std::max(max_ang, std::abs(wrap_angle_rad(d.z())) * 180 / kPi);
  }
  EXPECT_LE(max_off, 20.0);
  EXPECT_GT(max_off, 15.0);
  EXPECT_LE(max_ang, 20.0);
  EXPECT_GT(max_ang, 15.0);
  EXPECT_NE(a[0].scene.seed, a[1].scene.seed);
  EXPECT_THROW(make_trial_set(0, 1), Error);
}

// Mean absolute residual at the truth against eight 1 m offsets, pooled over
// 50 scenes on the finest level. Individual scenes reach about 8x because the
// far field of a level-3 pixel spans many meters of ground.
TEST(RendererSolverConsistency, GroundTruthResidualTenTimesSmaller) {
  const int level = 3;
  const auto trials = make_trial_set(50, 21);
  double gt_sum = 0;
  std::vector<double> off_sum(8, 0.0);
  for (const Trial& t : trials) {
    const auto p = crossview::testing::prepare(t);
    const FeatureMap& g = p.ground.level(level);
    auto mean_abs = [&](const Pose3DoF& pose) {
      const ProjectedFeatures pf = project_features(p.satellite.level(level), pose, g);
      double s = 0;
      std::size_t n = 0;
      for (int y = 0; y < g.height(); ++y) {
        for (int x = 0; x < g.width(); ++x) {
          if (!pf.valid(x, y)) continue;
          for (int c = 0; c < g.channels(); ++c) s += std::abs(pf.features.at(x, y, c) - g.data.at(x, y, c));
          n += g.channels();
        }
      }
      return s / n;
    };
    gt_sum += mean_abs(p.scene.gt_pose());
    const Eigen::Vector2d c = p.scene.gt_pose().camera_center();
    for (int d = 0; d < 8; ++d) {
      const double a = d * kPi / 4;
      off_sum[d] += mean_abs(Pose3DoF::from_camera_center(c.x() + std::cos(a), c.y() + std::sin(a),
                                                          p.scene.gt_pose().theta()));
    }
  }
  ASSERT_GT(gt_sum, 0.0);
  for (int d = 0; d < 8; ++d) EXPECT_GT(off_sum[d], 10.0 * gt_sum) << "direction " << d;
}
