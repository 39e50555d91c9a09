#include "trajforge/envs/point_mass.hpp"

#include <algorithm>

#include "trajforge/core/error.hpp"
#include "trajforge/policies/policy.hpp"

namespace trajforge {

PointMass2D::PointMass2D(PointMassConfig cfg) : cfg_(std::move(cfg)) {
  if (!(cfg_.dt > 0.0) || !(cfg_.v_max > 0.0) || cfg_.noise_std < 0.0 || cfg_.horizon < 1)
    throw ConfigError("PointMass2D: dt, v_max and horizon must be positive, noise_std non-negative");
}

Eigen::VectorXd PointMass2D::reset(Rng& rng) const {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(kStateDim);
  for (Index i = 0; i < 2; ++i) s[i] = std::clamp(cfg_.start[i] + cfg_.start_noise * rng.normal(), -1.0, 1.0);
  return s;
}

double PointMass2D::reward(const Eigen::VectorXd& next_state) const {
  const double dist = (next_state.head<2>() - cfg_.goal).norm();
  if (cfg_.reward == RewardKind::sparse) return dist <= cfg_.goal_radius ? 1.0 : 0.0;
  return -dist;
}

StepResult PointMass2D::step(const Eigen::VectorXd& state, const Eigen::VectorXd& action, Rng& rng) const {
  if (state.size() != kStateDim || action.size() != kActionDim)
    throw InvalidArgument("PointMass2D::step: dimension mismatch");
  if (!state.allFinite() || !action.allFinite()) throw InvalidArgument("PointMass2D::step: non-finite state or action");

  StepResult r;
  r.next_state.resize(kStateDim);
  for (Index i = 0; i < 2; ++i) {
    const double a = std::clamp(action[i], -1.0, 1.0);
    double v = state[2 + i] + a * cfg_.dt;
    if (cfg_.noise_std > 0.0) v += cfg_.noise_std * rng.normal();
    v = std::clamp(v, -cfg_.v_max, cfg_.v_max);
    r.next_state[2 + i] = v;
    r.next_state[i] = std::clamp(state[i] + v * cfg_.dt, -1.0, 1.0);
  }
  r.reward = reward(r.next_state);
  r.done = false;
  return r;
}

namespace {

template <typename ActionFn>
Trajectory run_episode(const PointMass2D& env, const Eigen::VectorXd& s0, Index n_steps, Rng& rng, ActionFn&& choose) {
  if (n_steps < 1) throw InvalidArgument("rollout: n_steps must be >= 1");
  Trajectory t = Trajectory::zeros(env.state_dim(), env.action_dim(), n_steps);
  t.states.col(0) = s0;
  bool finished = false;
  for (Index i = 0; i < n_steps; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (finished) {
      t.states.col(i + 1) = t.states.col(i);
      t.dones[k] = 1;
      t.padding[k] = 1;
      continue;
    }
    const Eigen::VectorXd a = choose(t.states.col(i));
    StepResult r = env.step(t.states.col(i), a, rng);
    t.actions.col(i) = a.cwiseMax(-1.0).cwiseMin(1.0);
    t.rewards[i] = r.reward;
    t.states.col(i + 1) = r.next_state;
    finished = r.done || (i + 1 >= env.config().horizon);
    t.dones[k] = finished ? 1 : 0;
  }
  return t;
}

}  // namespace

Trajectory rollout(const PointMass2D& env, const Policy& policy, const Eigen::VectorXd& initial_state, Index n_steps,
                   Rng& rng) {
  return run_episode(env, initial_state, n_steps, rng,
                     [&](const Eigen::VectorXd& s) { return sample(policy, s, rng); });
}

Trajectory rollout_deterministic(const PointMass2D& env, const Policy& policy, const Eigen::VectorXd& initial_state,
                                 Index n_steps, Rng& rng) {
  return run_episode(env, initial_state, n_steps, rng, [&](const Eigen::VectorXd& s) { return policy.mean(s); });
}

Eigen::MatrixXd replay_actions(const PointMass2D& env, const Eigen::VectorXd& initial_state,
                               const Eigen::MatrixXd& actions) {
  if (!env.deterministic()) throw ConfigError("replay_actions: oracle mode requires noise_std = 0");
  Rng unused(0);
  Eigen::MatrixXd states(env.state_dim(), actions.cols() + 1);
  states.col(0) = initial_state;
  for (Index i = 0; i < actions.cols(); ++i) states.col(i + 1) = env.step(states.col(i), actions.col(i), unused).next_state;
  return states;
}

}  // namespace trajforge
