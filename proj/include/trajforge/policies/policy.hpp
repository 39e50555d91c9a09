#pragma once

#include <functional>
#include <memory>

#include <Eigen/Core>

#include "trajforge/core/random.hpp"
#include "trajforge/core/trajectory.hpp"

namespace trajforge {

/// State-conditioned diagonal Gaussian over actions. Densities are those of
/// the unbounded Gaussian; action bounds only apply when an environment
/// executes the action.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual Index state_dim() const = 0;
  virtual Index action_dim() const = 0;
  virtual Eigen::VectorXd mean(const Eigen::VectorXd& state) const = 0;
  virtual Eigen::VectorXd log_std() const = 0;

  /// Means for a batch of states (one per column).
  virtual Eigen::MatrixXd mean_batch(const Eigen::MatrixXd& states) const;
};

/// Deterministic state -> action map (e.g. a TD3+BC actor).
class DeterministicPolicy {
 public:
  virtual ~DeterministicPolicy() = default;
  virtual Index state_dim() const = 0;
  virtual Index action_dim() const = 0;
  virtual Eigen::VectorXd act(const Eigen::VectorXd& state) const = 0;
  virtual Eigen::MatrixXd act_batch(const Eigen::MatrixXd& states) const;
};

double log_prob(const Policy& policy, const Eigen::VectorXd& state, const Eigen::VectorXd& action);

/// Closed-form (mu(s) - a) / sigma^2. No gradient flows through the state.
Eigen::VectorXd action_grad_log_prob(const Policy& policy, const Eigen::VectorXd& state,
                                     const Eigen::VectorXd& action);

/// Column-wise action gradients for (state, action) pairs.
Eigen::MatrixXd action_grad_log_prob_batch(const Policy& policy, const Eigen::MatrixXd& states,
                                           const Eigen::MatrixXd& actions);

/// Column-wise log densities.
Eigen::VectorXd log_prob_batch(const Policy& policy, const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions);

Eigen::VectorXd sample(const Policy& policy, const Eigen::VectorXd& state, Rng& rng);

/// Expected log density -1/2 sum_i (1 + ln(2 pi sigma_i^2)).
double expected_log_prob(const Policy& policy);

/// Gaussian with a user-supplied mean function and fixed log std.
class FunctionPolicy final : public Policy {
 public:
  using MeanFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  FunctionPolicy(Index state_dim, Index action_dim, MeanFn mean, Eigen::VectorXd log_std);

  Index state_dim() const override { return state_dim_; }
  Index action_dim() const override { return action_dim_; }
  Eigen::VectorXd mean(const Eigen::VectorXd& state) const override { return mean_(state); }
  Eigen::VectorXd log_std() const override { return log_std_; }

 private:
  Index state_dim_, action_dim_;
  MeanFn mean_;
  Eigen::VectorXd log_std_;
};

/// Unit (by default) Gaussian centred on a deterministic policy's action.
class DeterministicAsGaussian final : public Policy {
 public:
  explicit DeterministicAsGaussian(std::shared_ptr<const DeterministicPolicy> base, double std = 1.0);
  DeterministicAsGaussian(std::shared_ptr<const DeterministicPolicy> base, Eigen::VectorXd std);

  Index state_dim() const override { return base_->state_dim(); }
  Index action_dim() const override { return base_->action_dim(); }
  Eigen::VectorXd mean(const Eigen::VectorXd& state) const override { return base_->act(state); }
  Eigen::MatrixXd mean_batch(const Eigen::MatrixXd& states) const override { return base_->act_batch(states); }
  Eigen::VectorXd log_std() const override { return log_std_; }

  const DeterministicPolicy& base() const { return *base_; }

 private:
  std::shared_ptr<const DeterministicPolicy> base_;
  Eigen::VectorXd log_std_;
};

/// Presents a raw-unit policy in the z-scored coordinates of `stats`:
/// states are de-normalized before the base sees them and the action
/// distribution is mapped through the action normalization.
class NormalizedPolicyView final : public Policy {
 public:
  NormalizedPolicyView(std::shared_ptr<const Policy> base, NormStats stats);

  Index state_dim() const override { return base_->state_dim(); }
  Index action_dim() const override { return base_->action_dim(); }
  Eigen::VectorXd mean(const Eigen::VectorXd& state) const override;
  Eigen::MatrixXd mean_batch(const Eigen::MatrixXd& states) const override;
  Eigen::VectorXd log_std() const override;

 private:
  std::shared_ptr<const Policy> base_;
  NormStats stats_;
};

}  // namespace trajforge
