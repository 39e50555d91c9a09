#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "trajforge/core/random.hpp"
#include "trajforge/core/transitions.hpp"
#include "trajforge/envs/point_mass.hpp"
#include "trajforge/nn/adam.hpp"
#include "trajforge/nn/mlp.hpp"
#include "trajforge/policies/policy.hpp"

namespace trajforge::agent {

struct AgentConfig {
  double gamma = 0.99;
  double tau = 0.005;
  double policy_noise = 0.2;
  double noise_clip = 0.5;
  int policy_delay = 2;
  double alpha = 2.5;
  /// false drops the behavior-cloning term (plain TD3).
  bool behavior_cloning = true;
  int batch = 256;
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  std::vector<Index> hidden{64, 64};
  double action_bound = 1.0;
  /// When false, done flags are time limits and targets bootstrap through them.
  bool terminal_dones = false;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Deterministic actor in raw state units: bound * tanh(mlp((s - mean) / std)).
class Actor final : public DeterministicPolicy {
 public:
  Actor() = default;
  Actor(Index state_dim, Index action_dim, const std::vector<Index>& hidden, double bound, Rng& rng);

  Index state_dim() const override { return net_.in(); }
  Index action_dim() const override { return net_.out(); }
  Eigen::VectorXd act(const Eigen::VectorXd& state) const override;
  Eigen::MatrixXd act_batch(const Eigen::MatrixXd& states) const override;

  void set_state_normalizer(Eigen::VectorXd mean, Eigen::VectorXd std);
  Eigen::MatrixXd normalize_states(const Eigen::MatrixXd& states) const;
  nn::Mlp& network() { return net_; }
  const nn::Mlp& network() const { return net_; }
  double bound() const { return bound_; }

  void save(const std::filesystem::path& path);
  static Actor load(const std::filesystem::path& path);

 private:
  nn::Mlp net_;
  Eigen::VectorXd mean_, std_;
  double bound_ = 1.0;
};

struct UpdateInfo {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double bc_loss = 0.0;
  bool actor_updated = false;
  bool skipped = false;
};

/// Twin-critic TD3 with the TD3+BC actor objective
/// -lambda Q(s, pi(s)) + (pi(s) - a)^2, lambda = alpha / mean|Q|.
class Td3Bc {
 public:
  Td3Bc(Index state_dim, Index action_dim, AgentConfig cfg);

  const AgentConfig& config() const { return cfg_; }
  void set_state_normalizer(const Eigen::VectorXd& mean, const Eigen::VectorXd& std);

  /// One gradient step on a minibatch (columns of `batch`). A non-finite loss
  /// or gradient skips the step and counts an anomaly.
  UpdateInfo update(const Transitions& batch);

  const Actor& actor() const { return actor_; }
  Actor& actor() { return actor_; }
  std::shared_ptr<const Actor> snapshot() const { return std::make_shared<Actor>(actor_); }
  /// Q1 for a batch of raw states and actions.
  Eigen::RowVectorXd q1(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) const;
  std::int64_t steps() const { return steps_; }
  std::int64_t anomalies() const { return anomalies_; }
  Rng& rng() { return rng_; }

  nn::ParamList params();

 private:
  Eigen::MatrixXd critic_input(const Eigen::MatrixXd& norm_states, const Eigen::MatrixXd& actions) const;

  AgentConfig cfg_;
  Actor actor_, actor_target_;
  nn::Mlp q1_, q2_, q1_target_, q2_target_;
  nn::Adam actor_opt_, critic_opt_;
  Rng rng_;
  std::int64_t steps_ = 0;
  std::int64_t anomalies_ = 0;
};

/// Uniform minibatch (with replacement) from the first `limit` columns of a
/// transition table (all of them when `limit` is 0).
Transitions sample_batch(const Transitions& data, int batch, Rng& rng, std::size_t limit = 0);

struct OnlineConfig {
  std::int64_t steps = 20000;
  std::int64_t random_steps = 1000;
  double exploration_std = 0.1;
  std::uint64_t seed = 0;
};

/// Plain online TD3 in the real environment; the result serves as an
/// out-of-distribution-strong target policy.
Actor train_online_td3(const PointMass2D& env, AgentConfig cfg, const OnlineConfig& online);

/// Mean undiscounted return of `episodes` runs of the policy mean.
double evaluate(const PointMass2D& env, const DeterministicPolicy& policy, int episodes, std::uint64_t seed);

}  // namespace trajforge::agent
