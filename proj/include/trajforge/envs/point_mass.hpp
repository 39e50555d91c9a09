#pragma once

#include <Eigen/Core>

#include "trajforge/core/random.hpp"
#include "trajforge/core/trajectory.hpp"

namespace trajforge {

class Policy;

enum class RewardKind { dense, sparse };

struct PointMassConfig {
  double dt = 0.1;
  double v_max = 1.0;
  double noise_std = 0.02;
  /// Task goal: the reward is measured against this point.
  Eigen::Vector2d goal{0.5, -0.5};
  Eigen::Vector2d start{-0.5, 0.0};
  /// Std of the Gaussian perturbation of the start position.
  double start_noise = 0.05;
  int horizon = 64;
  RewardKind reward = RewardKind::dense;
  double goal_radius = 0.1;
};

struct StepResult {
  Eigen::VectorXd next_state;
  double reward = 0.0;
  bool done = false;
};

/// 2-D point mass in the arena [-1, 1]^2. State (x, y, vx, vy), action
/// (ax, ay) clipped to [-1, 1]^2.
class PointMass2D {
 public:
  static constexpr Index kStateDim = 4;
  static constexpr Index kActionDim = 2;

  PointMass2D() = default;
  explicit PointMass2D(PointMassConfig cfg);

  const PointMassConfig& config() const { return cfg_; }
  Index state_dim() const { return kStateDim; }
  Index action_dim() const { return kActionDim; }
  bool deterministic() const { return cfg_.noise_std == 0.0; }

  Eigen::VectorXd reset(Rng& rng) const;
  /// v' = clip(v + a dt + eps), p' = clip(p + v' dt). `rng` is untouched when
  /// the environment is noise-free.
  StepResult step(const Eigen::VectorXd& state, const Eigen::VectorXd& action, Rng& rng) const;
  double reward(const Eigen::VectorXd& next_state) const;

 private:
  PointMassConfig cfg_;
};

/// Runs `policy` for `n_steps` transitions. The transition that reaches the
/// environment horizon is marked done; anything after it is padding. Stored
/// actions are the executed (clipped) ones.
Trajectory rollout(const PointMass2D& env, const Policy& policy, const Eigen::VectorXd& initial_state, Index n_steps,
                   Rng& rng);

/// Same, with actions taken from the policy mean. `rng` only drives the
/// environment noise.
Trajectory rollout_deterministic(const PointMass2D& env, const Policy& policy, const Eigen::VectorXd& initial_state,
                                 Index n_steps, Rng& rng);

/// Ground-truth state sequence for an action sequence. Requires a noise-free
/// environment; returns state_dim x (n + 1).
Eigen::MatrixXd replay_actions(const PointMass2D& env, const Eigen::VectorXd& initial_state,
                               const Eigen::MatrixXd& actions);

}  // namespace trajforge
