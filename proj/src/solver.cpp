#include "crossview/solver.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "crossview/error.hpp"
#include "crossview/sampler.hpp"

namespace crossview {

void LMConfig::validate() const {
  if (levels.empty()) throw Error(ErrorCode::kInvalidArgument, "LM config: no levels");
  for (int l : levels) level_downsample_factor(l);
  if (max_iters_per_level < 1) {
    throw Error(ErrorCode::kInvalidArgument, "LM config: max_iters_per_level must be >= 1");
  }
  if (!(lambda_min > 0.0 && lambda_min <= lambda_max)) {
    throw Error(ErrorCode::kInvalidArgument, "LM config: lambda bounds out of order");
  }
  if (!(lambda_up > 1.0 && lambda_down > 0.0 && lambda_down < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "LM config: need lambda_up > 1 > lambda_down > 0");
  }
  if (!(lambda_init >= 0.0) || !(step_tol >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "LM config: lambda_init and step_tol must be >= 0");
  }
  if (outer_rounds < 1 || max_lambda_increases < 0) {
    throw Error(ErrorCode::kInvalidArgument, "LM config: invalid round / retry counts");
  }
}

LevelProblem::LevelProblem(const FeatureMap& ground, const FeatureMap& satellite)
    : ground_(&ground), satellite_(&satellite) {
  if (ground.level != satellite.level) {
    throw Error(ErrorCode::kLevelMismatch, "ground level " + std::to_string(ground.level) +
                                                " does not match satellite level " +
                                                std::to_string(satellite.level));
  }
  if (ground.channels() != satellite.channels()) {
    throw Error(ErrorCode::kInvalidArgument, "ground and satellite channel counts differ");
  }
  const CameraModel& cam = ground.camera();
  satellite.satellite();  // throws if not a satellite map
  if (cam.width != ground.width() || cam.height != ground.height()) {
    throw Error(ErrorCode::kInvalidArgument, "ground camera does not match its feature map");
  }
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const GroundRay ray = backproject_ground_pixel(cam, x, y);
      if (ray.valid) points_.push_back({x, y, ray.camera_point()});
    }
  }
}

namespace {

template <typename RowSink>
std::size_t accumulate(const Pose3DoF& pose, const LevelProblem& problem, RowSink&& sink) {
  const FeatureMap& sat = problem.satellite();
  const Image& ground = problem.ground().data;
  const PoseProjector projector(pose, sat.satellite());
  const int channels = sat.channels();
  std::vector<double> value(channels), du(channels), dv(channels);
  std::size_t valid = 0;
  for (const auto& pt : problem.ground_points()) {
    const SatellitePixel p = projector.project(pt.camera_point);
    if (!p.valid) continue;
    ++valid;
    bilinear_sample_with_gradient(sat.data, p.u, p.v, value, du, dv);
    const Eigen::Matrix<double, 2, 3> jp = projector.jacobian(pt.camera_point);
    const auto observed = ground.pixel(pt.x, pt.y);
    for (int k = 0; k < channels; ++k) {
      const Eigen::RowVector3d row = du[k] * jp.row(0) + dv[k] * jp.row(1);
      sink(value[k] - observed[k], row);
    }
  }
  if (valid == 0) {
    throw Error(ErrorCode::kDegenerateView, "degenerate view: no ground pixel projects onto the tile");
  }
  return valid;
}

}  // namespace

ResidualSystem build_residual_system(const Pose3DoF& pose, const LevelProblem& problem,
                                     bool store_residuals) {
  ResidualSystem sys;
  std::vector<double> residuals;
  std::vector<Eigen::RowVector3d> rows;
  if (store_residuals) {
    const std::size_t reserve = problem.ground_points().size() * problem.satellite().channels();
    residuals.reserve(reserve);
    rows.reserve(reserve);
  }
  sys.valid_count = accumulate(pose, problem, [&](double e, const Eigen::RowVector3d& row) {
    sys.H.noalias() += row.transpose() * row;
    sys.g.noalias() += row.transpose() * e;
    sys.cost += e * e;
    if (store_residuals) {
      residuals.push_back(e);
      rows.push_back(row);
    }
  });
  if (store_residuals) {
    sys.e = Eigen::Map<const Eigen::VectorXd>(residuals.data(),
                                              static_cast<Eigen::Index>(residuals.size()));
    sys.J.resize(static_cast<Eigen::Index>(rows.size()), 3);
    for (std::size_t i = 0; i < rows.size(); ++i) sys.J.row(static_cast<Eigen::Index>(i)) = rows[i];
  }
  return sys;
}

double evaluate_cost(const Pose3DoF& pose, const LevelProblem& problem, std::size_t* valid_count) {
  const FeatureMap& sat = problem.satellite();
  const Image& ground = problem.ground().data;
  const PoseProjector projector(pose, sat.satellite());
  const int channels = sat.channels();
  std::vector<double> value(channels);
  std::size_t valid = 0;
  double cost = 0.0;
  for (const auto& pt : problem.ground_points()) {
    const SatellitePixel p = projector.project(pt.camera_point);
    if (!p.valid) continue;
    ++valid;
    bilinear_sample(sat.data, p.u, p.v, value);
    const auto observed = ground.pixel(pt.x, pt.y);
    for (int k = 0; k < channels; ++k) {
      const double e = value[k] - observed[k];
      cost += e * e;
    }
  }
  if (valid == 0) {
    throw Error(ErrorCode::kDegenerateView, "degenerate view: no ground pixel projects onto the tile");
  }
  if (valid_count) *valid_count = valid;
  return cost;
}

Eigen::Vector3d lm_step(const ResidualSystem& system, double lambda) {
  if (system.g.isZero(0.0)) return Eigen::Vector3d::Zero();
  const double scale = system.H.trace() / 3.0;
  const Eigen::Matrix3d damped = system.H + lambda * scale * Eigen::Matrix3d::Identity();
  const Eigen::LDLT<Eigen::Matrix3d> ldlt(damped);
  const Eigen::Vector3d d = ldlt.vectorD();
  const double max_d = d.cwiseAbs().maxCoeff();
  if (ldlt.info() != Eigen::Success || !(max_d > 0.0) || d.minCoeff() <= 1e-14 * max_d) {
    throw Error(ErrorCode::kRankDeficient, "rank-deficient damped normal equations");
  }
  const Eigen::Vector3d delta = ldlt.solve(-system.g);
  if (!delta.allFinite()) {
    throw Error(ErrorCode::kRankDeficient, "rank-deficient damped normal equations");
  }
  return delta;
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::kMaxIterations: return "max_iterations";
    case Termination::kConverged: return "converged";
    case Termination::kStalled: return "stalled";
  }
  return "unknown";
}

void SolveTrace::append(const SolveTrace& fragment) {
  if (steps.empty() && iterates.empty()) initial_pose = fragment.initial_pose;
  steps.insert(steps.end(), fragment.steps.begin(), fragment.steps.end());
  iterates.insert(iterates.end(), fragment.iterates.begin(), fragment.iterates.end());
  final_pose = fragment.final_pose;
  final_cost = fragment.final_cost;
  termination = fragment.termination;
}

SolveTrace solve_level(const Pose3DoF& pose_in, const LevelProblem& problem, const LMConfig& cfg,
                       int round) {
  SolveTrace trace;
  trace.initial_pose = pose_in;
  trace.final_pose = pose_in;
  trace.termination = Termination::kMaxIterations;

  const double lambda_floor = cfg.lambda_min;
  double lambda = cfg.lambda_init;
  Pose3DoF pose = pose_in;
  ResidualSystem sys = build_residual_system(pose, problem, /*store_residuals=*/false);

  for (int it = 0; it < cfg.max_iters_per_level; ++it) {
    Eigen::Vector3d delta;
    bool have_step = false;
    for (int attempt = 0; attempt <= cfg.max_lambda_increases && !have_step; ++attempt) {
      try {
        delta = lm_step(sys, lambda);
        have_step = true;
      } catch (const Error& err) {
        if (err.code() != ErrorCode::kRankDeficient) throw;
        lambda = std::min(std::max(lambda, lambda_floor) * cfg.lambda_up, cfg.lambda_max);
      }
    }
    if (!have_step) {
      trace.termination = Termination::kStalled;
      break;
    }
    if (delta.norm() < cfg.step_tol) {
      trace.termination = Termination::kConverged;
      break;
    }

    bool accepted = false;
    for (int attempt = 0;; ++attempt) {
      TraceStep step;
      step.round = round;
      step.level = problem.level();
      step.iteration = it;
      step.pose_before = pose;
      step.pose_after = pose + delta;
      step.cost_before = sys.cost;
      step.lambda = lambda;
      try {
        step.cost_after = evaluate_cost(step.pose_after, problem);
      } catch (const Error& err) {
        if (err.code() != ErrorCode::kDegenerateView) throw;
        step.cost_after = std::numeric_limits<double>::infinity();
      }
      step.accepted = step.cost_after < step.cost_before;
      trace.steps.push_back(step);
      if (step.accepted) {
        pose = step.pose_after;
        lambda = std::max(lambda * cfg.lambda_down, lambda_floor);
        accepted = true;
        break;
      }
      if (attempt >= cfg.max_lambda_increases) break;
      lambda = std::min(std::max(lambda, lambda_floor) * cfg.lambda_up, cfg.lambda_max);
      try {
        delta = lm_step(sys, lambda);
      } catch (const Error& err) {
        if (err.code() != ErrorCode::kRankDeficient) throw;
      }
    }

    if (accepted) sys = build_residual_system(pose, problem, /*store_residuals=*/false);
    trace.iterates.push_back({round, problem.level(), it, pose, sys.cost});
    if (!accepted) {
      trace.termination = Termination::kStalled;
      break;
    }
  }
  trace.final_pose = pose;
  trace.final_cost = sys.cost;
  return trace;
}

SolveTrace solve_coarse_to_fine(const Pose3DoF& pose_init, const FeaturePyramid& ground,
                                const FeaturePyramid& satellite, const LMConfig& cfg) {
  cfg.validate();
  std::vector<LevelProblem> problems;
  problems.reserve(cfg.levels.size());
  for (int l : cfg.levels) problems.emplace_back(ground.level(l), satellite.level(l));

  SolveTrace trace;
  trace.initial_pose = pose_init;
  trace.final_pose = pose_init;
  Pose3DoF pose = pose_init;
  for (int round = 0; round < cfg.outer_rounds; ++round) {
    for (const LevelProblem& problem : problems) {
      const SolveTrace fragment = solve_level(pose, problem, cfg, round);
      trace.append(fragment);
      pose = fragment.final_pose;
    }
  }
  trace.initial_pose = pose_init;
  return trace;
}

double supervision_loss(const SolveTrace& trace, const Pose3DoF& gt) {
  if (trace.iterates.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "supervision loss of an empty trace");
  }
  const RigidTransform target = pose_to_rt(gt);
  double loss = 0.0;
  for (const TraceIterate& it : trace.iterates) {
    const RigidTransform est = pose_to_rt(it.pose);
    loss += (est.rotation - target.rotation).cwiseAbs().sum();
    loss += (est.translation - target.translation).cwiseAbs().sum();
  }
  return loss;
}

}  // namespace crossview
