#pragma once

// Multi-level damped Levenberg-Marquardt refinement of a 3-DoF ground pose
// against satellite features projected through the ground-plane homography.

#include <cstddef>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "crossview/features.hpp"
#include "crossview/geometry.hpp"

namespace crossview {

struct LMConfig {
  std::vector<int> levels{1, 2, 3};  // coarse -> fine
  int max_iters_per_level = 5;
  double lambda_init = 1e-2;
  double lambda_up = 10.0;
  double lambda_down = 0.1;
  double lambda_min = 1e-7;
  double lambda_max = 1e7;
  double step_tol = 1e-4;  // on the (m, m, rad) step norm
  int outer_rounds = 1;
  int max_lambda_increases = 8;

  /// Throws kInvalidArgument on out-of-range settings.
  void validate() const;
};

/// One pyramid level of a query: matched ground and satellite feature maps
/// plus the pose-independent ground-plane points of every usable ground pixel.
/// Holds references; both maps must outlive it.
class LevelProblem {
 public:
  /// Throws kLevelMismatch if the maps come from different levels.
  LevelProblem(const FeatureMap& ground, const FeatureMap& satellite);

  int level() const { return ground_->level; }
  const FeatureMap& ground() const { return *ground_; }
  const FeatureMap& satellite() const { return *satellite_; }

  struct GroundPoint {
    int x;
    int y;
    Eigen::Vector3d camera_point;
  };
  const std::vector<GroundPoint>& ground_points() const { return points_; }

 private:
  const FeatureMap* ground_;
  const FeatureMap* satellite_;
  std::vector<GroundPoint> points_;
};

/// Stacked residual e = F_s2g - F_g over unmasked pixels x channels, its
/// pose Jacobian, and the normal-equation terms.
struct ResidualSystem {
  Eigen::VectorXd e;
  Eigen::Matrix<double, Eigen::Dynamic, 3> J;
  Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
  Eigen::Vector3d g = Eigen::Vector3d::Zero();
  double cost = 0.0;  // ||e||^2
  std::size_t valid_count = 0;
};

/// With `store_residuals` false only H, g, cost and valid_count are filled.
/// Throws kDegenerateView when no ground pixel projects onto the tile.
ResidualSystem build_residual_system(const Pose3DoF& pose, const LevelProblem& problem,
                                     bool store_residuals = true);

/// ||e||^2 at `pose`; throws kDegenerateView like build_residual_system.
double evaluate_cost(const Pose3DoF& pose, const LevelProblem& problem,
                     std::size_t* valid_count = nullptr);

/// Solves (H + lambda * s * I) delta = -g with s = trace(H) / 3.
/// Throws kRankDeficient if the damped system is singular.
Eigen::Vector3d lm_step(const ResidualSystem& system, double lambda);

enum class Termination { kMaxIterations, kConverged, kStalled };
std::string_view to_string(Termination t);

/// One attempted (possibly rejected) update.
struct TraceStep {
  int round = 0;
  int level = 0;
  int iteration = 0;
  Pose3DoF pose_before;
  Pose3DoF pose_after;
  double cost_before = 0.0;
  double cost_after = 0.0;
  double lambda = 0.0;
  bool accepted = false;
};

/// Pose at the end of iteration `iteration` of `level`.
struct TraceIterate {
  int round = 0;
  int level = 0;
  int iteration = 0;
  Pose3DoF pose;
  double cost = 0.0;
};

struct SolveTrace {
  std::vector<TraceStep> steps;
  std::vector<TraceIterate> iterates;
  Pose3DoF initial_pose;
  Pose3DoF final_pose;
  double final_cost = 0.0;
  Termination termination = Termination::kMaxIterations;

  void append(const SolveTrace& fragment);
};

/// LM iterations on one level; `round` only labels the trace.
SolveTrace solve_level(const Pose3DoF& pose_in, const LevelProblem& problem,
                       const LMConfig& cfg, int round = 0);

/// Runs solve_level over cfg.levels in order, cfg.outer_rounds times.
SolveTrace solve_coarse_to_fine(const Pose3DoF& pose_init, const FeaturePyramid& ground,
                                const FeaturePyramid& satellite, const LMConfig& cfg);

/// Sum over all trace iterates of ||R_t - R*||_1 + ||t_t - t*||_1
/// (entrywise). Throws kInvalidArgument on an empty trace.
double supervision_loss(const SolveTrace& trace, const Pose3DoF& gt);

}  // namespace crossview
