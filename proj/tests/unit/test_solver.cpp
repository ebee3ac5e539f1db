#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "crossview/diagnostics.hpp"
#include "crossview/error.hpp"
#include "crossview/metrics.hpp"
#include "crossview/sampler.hpp"
#include "crossview/solver.hpp"
#include "../support/fixture.hpp"

using namespace crossview;
using crossview::testing::PreparedTrial;
using crossview::testing::prepare;

namespace {

FeatureMap constant_satellite(int level, double a, double b) {
  const int size = 512 / level_downsample_factor(level);
  FeatureMap m;
  m.data = Image(size, size, 3);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      m.data.at(x, y, 0) = a;
      m.data.at(x, y, 1) = b;
    }
  m.level = level;
  m.frame = SatelliteFrame::centered(0.2, 512, 512).at_level(level);
  return m;
}

// Ground features that are exactly the satellite features seen from `gt`.
FeatureMap consistent_ground(const FeatureMap& sat, const Pose3DoF& gt) {
  FeatureMap g;
  g.level = sat.level;
  g.frame = default_synth_camera().at_level(sat.level);
  g.data = project_features(sat, gt, g.camera(), g.level).features;
  return g;
}

const PreparedTrial& shared_trial() {
  static const PreparedTrial p = [] {
    TrialSetOptions opts;
    opts.init_radius_m = 5.0;
    opts.init_angle_deg = 10.0;
    return prepare(make_trial_set(1, 55, opts).front());
  }();
  return p;
}

ResidualSystem system_from(const Eigen::Matrix3d& H, const Eigen::Vector3d& g) {
  ResidualSystem s;
  s.H = H;
  s.g = g;
  return s;
}

}  // namespace

TEST(LMConfig, DefaultsMatchBudget) {
  const LMConfig cfg;
  EXPECT_EQ(cfg.levels, (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(cfg.max_iters_per_level, 5);
  EXPECT_EQ(cfg.levels.size() * cfg.max_iters_per_level, 15u);
  EXPECT_GT(cfg.lambda_up, 1.0);
  EXPECT_LT(cfg.lambda_down, 1.0);
  EXPECT_GT(cfg.lambda_down, 0.0);
  EXPECT_LT(cfg.lambda_min, cfg.lambda_max);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(LMConfig, ValidateRejectsBadSettings) {
  LMConfig c;
  c.levels = {};
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.levels = {4};
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.lambda_up = 0.5;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.lambda_min = 1e8;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.max_iters_per_level = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(LmStep, LinearResidualOneStepExact) {
  // e = xi - 5 on every axis, J = I, evaluated at xi = 0.
  const ResidualSystem s = system_from(Eigen::Matrix3d::Identity(), Eigen::Vector3d::Constant(-5));
  EXPECT_LT((lm_step(s, 0.0) - Eigen::Vector3d::Constant(5)).norm(), 1e-12);
  // s = trace(H) / 3 = 1, so lambda = 1 gives lambda * s = 1.
  EXPECT_LT((lm_step(s, 1.0) - Eigen::Vector3d::Constant(2.5)).norm(), 1e-12);
}

TEST(LmStep, StationaryPointGivesZero) {
  Eigen::Matrix3d H;
  H << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2;
  for (double lambda : {0.0, 1e-3, 1.0, 1e6}) {
    EXPECT_EQ(lm_step(system_from(H, Eigen::Vector3d::Zero()), lambda), Eigen::Vector3d::Zero());
  }
}

TEST(LmStep, SingularSystemThrows) {
  Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
  H(0, 0) = 1.0;
  try {
    lm_step(system_from(H, Eigen::Vector3d(1, 1, 1)), 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRankDeficient);
  }
  EXPECT_NO_THROW(lm_step(system_from(H, Eigen::Vector3d(1, 1, 1)), 1.0));
}

TEST(LmStep, HeavyDampingApproachesGradientDescent) {
  const PreparedTrial& p = shared_trial();
  const LevelProblem problem(p.ground.level(2), p.satellite.level(2));
  const ResidualSystem s = build_residual_system(p.init_pose, problem, false);
  // Damping is lambda * trace(H) / 3, which swamps H at lambda = 1e6.
  const double lambda = 1e6;
  const double damping = lambda * s.H.trace() / 3.0;
  const Eigen::Vector3d d = lm_step(s, lambda);
  const Eigen::Vector3d descent = -s.g;
  const double angle = std::acos(std::clamp(d.dot(descent) / (d.norm() * descent.norm()), -1.0, 1.0));
  EXPECT_LT(angle, 1e-3);
  EXPECT_LT((d - descent / damping).norm(), 1e-3 * d.norm());
}

TEST(LmStep, GaussNewtonStepInvariantToFeatureGain) {
  const PreparedTrial& p = shared_trial();
  FeatureMap g = p.ground.level(2);
  FeatureMap s = p.satellite.level(2);
  const LevelProblem base(g, s);
  const Eigen::Vector3d d0 = lm_step(build_residual_system(p.init_pose, base, false), 0.0);
  for (double& v : g.data.data()) v *= 2.5;
  for (double& v : s.data.data()) v *= 2.5;
  const LevelProblem scaled(g, s);
  const Eigen::Vector3d d1 = lm_step(build_residual_system(p.init_pose, scaled, false), 0.0);
  EXPECT_LT((d1 - d0).norm(), 1e-9 * d0.norm());
}

TEST(ResidualSystem, FlatFieldsGiveZeroSystem) {
  const FeatureMap sat = constant_satellite(2, 0.6, 0.8);
  FeatureMap ground;
  ground.level = 2;
  ground.frame = default_synth_camera().at_level(2);
  ground.data = Image(ground.camera().width, ground.camera().height, 3);
  for (int y = 0; y < ground.height(); ++y)
    for (int x = 0; x < ground.width(); ++x) {
      ground.data.at(x, y, 0) = 0.6;
      ground.data.at(x, y, 1) = 0.8;
    }
  const LevelProblem problem(ground, sat);
  const ResidualSystem sys = build_residual_system(Pose3DoF(1.0, 2.0, 0.3), problem);
  ASSERT_GT(sys.valid_count, 0u);
  EXPECT_LT(sys.e.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(sys.J.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(sys.H.cwiseAbs().maxCoeff(), 0.0);
}

TEST(ResidualSystem, ShapesAndNormalEquations) {
  const PreparedTrial& p = shared_trial();
  const LevelProblem problem(p.ground.level(2), p.satellite.level(2));
  const ResidualSystem full = build_residual_system(p.init_pose, problem, true);
  const ResidualSystem light = build_residual_system(p.init_pose, problem, false);
  EXPECT_EQ(full.e.size(), static_cast<Eigen::Index>(full.valid_count * 3));
  EXPECT_EQ(full.J.rows(), full.e.size());
  EXPECT_EQ(light.e.size(), 0);
  EXPECT_EQ(full.valid_count, light.valid_count);
  const Eigen::Matrix3d H = full.J.transpose() * full.J;
  const Eigen::Vector3d g = full.J.transpose() * full.e;
  EXPECT_LT((H - full.H).norm(), 1e-9 * H.norm());
  EXPECT_LT((g - full.g).norm(), 1e-9 * g.norm());
  EXPECT_NEAR(full.cost, full.e.squaredNorm(), 1e-9 * full.cost);
  EXPECT_DOUBLE_EQ(full.cost, light.cost);
  EXPECT_NEAR(evaluate_cost(p.init_pose, problem), full.cost, 1e-9 * full.cost);
  // Symmetric positive semidefinite.
  EXPECT_LT((full.H - full.H.transpose()).norm(), 1e-12 * full.H.norm());
  const Eigen::Vector3d eig = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(full.H).eigenvalues();
  EXPECT_GE(eig.minCoeff(), -1e-9 * full.H.trace());
}

TEST(ResidualSystem, MaskedPixelsAreAbsent) {
  const PreparedTrial& p = shared_trial();
  const FeatureMap& sat = p.satellite.level(1);
  const FeatureMap& ground = p.ground.level(1);
  const LevelProblem problem(ground, sat);
  const Pose3DoF pose = p.init_pose;
  const ProjectedFeatures pf = project_features(sat, pose, ground);
  const ResidualSystem sys = build_residual_system(pose, problem);
  EXPECT_EQ(sys.valid_count, pf.valid_count());
  // Rebuild the stacked residual independently from the projected features.
  std::vector<double> expected;
  for (int y = 0; y < ground.height(); ++y)
    for (int x = 0; x < ground.width(); ++x)
      if (pf.valid(x, y))
        for (int c = 0; c < 3; ++c) expected.push_back(pf.features.at(x, y, c) - ground.data.at(x, y, c));
  ASSERT_EQ(static_cast<Eigen::Index>(expected.size()), sys.e.size());
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(sys.e[i], expected[i], 1e-12);
}

TEST(ResidualSystem, ResidualAtGroundTruthIsResamplingNoise) {
  // Coarse levels keep a larger far-field mismatch, so check the finest one.
  const PreparedTrial& p = shared_trial();
  const LevelProblem problem(p.ground.level(3), p.satellite.level(3));
  const ResidualSystem sys = build_residual_system(p.scene.gt_pose(), problem, false);
  EXPECT_LT(sys.cost / sys.valid_count, 1e-3);
}

TEST(ResidualSystem, JacobianMatchesFiniteDifferences) {
  TrialSetOptions opts;
  opts.init_radius_m = 5.0;
  opts.init_angle_deg = 10.0;
  for (const Trial& t : make_trial_set(4, 66, opts)) {
    const PreparedTrial p = prepare(t);
    for (int l = 1; l <= 3; ++l) {
      const LevelProblem problem(p.ground.level(l), p.satellite.level(l));
      const JacobianCheck jc = check_residual_jacobian(p.init_pose, problem);
      EXPECT_LT(jc.max_rel_error, 1e-3);
      EXPECT_GT(jc.rows_compared, 10 * jc.rows_excluded);
    }
  }
}

TEST(ResidualSystem, DegenerateViewThrows) {
  const PreparedTrial& p = shared_trial();
  const LevelProblem problem(p.ground.level(1), p.satellite.level(1));
  try {
    build_residual_system(Pose3DoF::from_camera_center(500.0, 500.0, 0.0), problem);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateView);
  }
  EXPECT_THROW(evaluate_cost(Pose3DoF::from_camera_center(500.0, 500.0, 0.0), problem), Error);
}

TEST(LevelProblem, GuardsMismatchedMaps) {
  const PreparedTrial& p = shared_trial();
  try {
    LevelProblem(p.ground.level(1), p.satellite.level(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLevelMismatch);
  }
  EXPECT_THROW(LevelProblem(p.satellite.level(1), p.satellite.level(1)), Error);
}

TEST(SolveLevel, StartAtOptimumConverges) {
  const PreparedTrial& p = shared_trial();
  const FeatureMap& sat = p.satellite.level(3);
  const FeatureMap ground = consistent_ground(sat, p.scene.gt_pose());
  const LevelProblem problem(ground, sat);
  const SolveTrace t = solve_level(p.scene.gt_pose(), problem, LMConfig{});
  int accepted = 0;
  for (const TraceStep& s : t.steps) accepted += s.accepted;
  EXPECT_LE(accepted, 1);
  EXPECT_EQ(t.termination, Termination::kConverged);
  EXPECT_LT((t.final_pose.as_vector() - p.scene.gt_pose().as_vector()).norm(), LMConfig{}.step_tol);
}

TEST(SolveCoarseToFine, StartAtOptimumStaysPut) {
  const PreparedTrial& p = shared_trial();
  FeaturePyramid ground;
  for (int l = 1; l <= 3; ++l) ground.levels[l - 1] = consistent_ground(p.satellite.level(l), p.scene.gt_pose());
  const SolveTrace t = solve_coarse_to_fine(p.scene.gt_pose(), ground, p.satellite, LMConfig{});
  EXPECT_LT((t.final_pose.as_vector() - p.scene.gt_pose().as_vector()).norm(), LMConfig{}.step_tol);
  EXPECT_EQ(t.final_cost, 0.0);
}

TEST(SolveLevel, AcceptedStepsStrictlyDecrease) {
  TrialSetOptions opts;
  opts.init_radius_m = 8.0;
  opts.init_angle_deg = 15.0;
  for (const Trial& trial : make_trial_set(5, 77, opts)) {
    const PreparedTrial p = prepare(trial);
    const SolveTrace t = solve_coarse_to_fine(p.init_pose, p.ground, p.satellite, LMConfig{});
    EXPECT_EQ(count_monotonicity_violations(t), 0);
    for (const TraceStep& s : t.steps) {
      if (s.accepted) EXPECT_LT(s.cost_after, s.cost_before);
      if (!s.accepted) EXPECT_FALSE(s.cost_after < s.cost_before);
    }
    for (std::size_t i = 1; i < t.iterates.size(); ++i) {
      if (t.iterates[i].level == t.iterates[i - 1].level) EXPECT_LE(t.iterates[i].cost, t.iterates[i - 1].cost);
    }
  }
}

TEST(SolveLevel, LateralOffsetRecoveredOnFinestLevel) {
  LMConfig cfg;
  cfg.levels = {3};
  TrialSetOptions opts;
  opts.init_radius_m = 0.0;
  opts.init_angle_deg = 0.0;
  const auto trials = make_trial_set(100, 88, opts);
  int ok = 0;
  for (const Trial& trial : trials) {
    const PreparedTrial p = prepare(trial);
    const Pose3DoF init = p.scene.gt_pose() + Eigen::Vector3d(2.0, 0.0, 0.0);
    const SolveTrace t = solve_coarse_to_fine(init, p.ground, p.satellite, cfg);
    const PoseError err = decompose_error(t.final_pose, p.scene.gt_pose());
    ok += err.lateral < 0.3;
  }
  EXPECT_GE(ok, 90);
}

TEST(SolveCoarseToFine, TraceBudgetAndLabels) {
  const PreparedTrial& p = shared_trial();
  LMConfig cfg;
  cfg.outer_rounds = 2;
  const SolveTrace t = solve_coarse_to_fine(p.init_pose, p.ground, p.satellite, cfg);
  EXPECT_LE(t.iterates.size(), 30u);
  EXPECT_EQ(t.initial_pose, p.init_pose);
  int last_round = 0;
  for (const TraceIterate& it : t.iterates) {
    EXPECT_GE(it.round, last_round);
    EXPECT_LT(it.iteration, cfg.max_iters_per_level);
    last_round = it.round;
  }
  if (!t.iterates.empty()) EXPECT_EQ(t.iterates.back().pose, t.final_pose);
}

TEST(SolveCoarseToFine, DeterministicTraces) {
  const PreparedTrial& p = shared_trial();
  const SolveTrace a = solve_coarse_to_fine(p.init_pose, p.ground, p.satellite, LMConfig{});
  const SolveTrace b = solve_coarse_to_fine(p.init_pose, p.ground, p.satellite, LMConfig{});
  ASSERT_EQ(a.steps.size(), b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    EXPECT_EQ(a.steps[i].pose_after, b.steps[i].pose_after);
    EXPECT_EQ(a.steps[i].cost_after, b.steps[i].cost_after);
    EXPECT_EQ(a.steps[i].lambda, b.steps[i].lambda);
  }
  EXPECT_EQ(a.final_pose, b.final_pose);
  EXPECT_EQ(a.final_cost, b.final_cost);
}

TEST(SupervisionLoss, HandExamples) {
  const Pose3DoF gt(1.0, 2.0, 0.3);
  SolveTrace t;
  t.iterates.push_back({0, 1, 0, gt, 0.0});
  t.iterates.push_back({0, 1, 1, gt, 0.0});
  EXPECT_EQ(supervision_loss(t, gt), 0.0);

  SolveTrace one;
  one.iterates.push_back({0, 1, 0, Pose3DoF(2.0, 4.0, 0.3), 0.0});
  EXPECT_NEAR(supervision_loss(one, gt), 3.0, 1e-12);

  // A yaw error of d contributes 2|sin d| + 2|1 - cos d| from the four changed entries.
  SolveTrace rot;
  const double d = 0.1;
  rot.iterates.push_back({0, 1, 0, Pose3DoF(1.0, 2.0, 0.3 + d), 0.0});
  const double expected = 2 * (std::abs(std::sin(0.3 + d) - std::sin(0.3)) + std::abs(std::cos(0.3 + d) - std::cos(0.3)));
  EXPECT_NEAR(supervision_loss(rot, gt), expected, 1e-12);
  EXPECT_GT(supervision_loss(rot, gt), 0.0);

  EXPECT_THROW(supervision_loss(SolveTrace{}, gt), Error);
}
