#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace trajforge::oracle {

/// Linear-Gaussian one-step chain tau = (s0, a, s1):
///   s0 ~ N(m0, v0), a ~ N(k s0 + b, sd^2), s1 ~ N(s0 + dt a, vt).
/// Behavior and target differ only in the policy (k, b, sd).
struct GaussianPolicyParams {
  double k = 0.0;
  double b = 0.0;
  double sd = 1.0;
};

struct GaussianChain {
  double m0 = 0.0;
  double v0 = 1.0;
  double dt = 0.1;
  double vt = 0.01;
  GaussianPolicyParams off;
  GaussianPolicyParams target;
};

/// Joint mean and covariance of tau under one policy.
void chain_moments(const GaussianChain& c, const GaussianPolicyParams& pi, Eigen::Vector3d& mean,
                   Eigen::Matrix3d& cov);

/// grad_tau log N(tau; mean, cov).
Eigen::Vector3d joint_score(const Eigen::Vector3d& mean, const Eigen::Matrix3d& cov, const Eigen::Vector3d& tau);

/// grad_tau log pi(a | s0) with tau = (s0, a, s1).
Eigen::Vector3d policy_score(const GaussianPolicyParams& pi, const Eigen::Vector3d& tau);

struct ScoreIdentityResult {
  /// target score vs behavior score + target policy score - behavior policy score
  double identity_error = 0.0;
  /// score of p_off * q_target^lambda (completed square) vs the sum of scores
  double lambda_error = 0.0;
  /// lambda = 0 variant vs the behavior score
  double lambda0_error = 0.0;
};

/// Checks the score identities on `points` random trajectories for each
/// lambda in `lambdas`.
ScoreIdentityResult check_score_identity(const GaussianChain& c, const std::vector<double>& lambdas, int points,
                                         std::uint64_t seed);

}  // namespace trajforge::oracle
