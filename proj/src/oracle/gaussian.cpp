#include "trajforge/oracle/gaussian.hpp"

#include <Eigen/Dense>

#include "trajforge/core/error.hpp"
#include "trajforge/core/random.hpp"

namespace trajforge::oracle {

void chain_moments(const GaussianChain& c, const GaussianPolicyParams& pi, Eigen::Vector3d& mean, Eigen::Matrix3d& cov) {
  // tau = L z + offset with z ~ N(0, I): s0 = m0 + sqrt(v0) z0,
  // a = k s0 + b + sd z1, s1 = s0 + dt a + sqrt(vt) z2.
  Eigen::Matrix3d L = Eigen::Matrix3d::Zero();
  L(0, 0) = std::sqrt(c.v0);
  L(1, 0) = pi.k * L(0, 0);
  L(1, 1) = pi.sd;
  L.row(2) = L.row(0) + c.dt * L.row(1);
  L(2, 2) = std::sqrt(c.vt);
  mean[0] = c.m0;
  mean[1] = pi.k * c.m0 + pi.b;
  mean[2] = mean[0] + c.dt * mean[1];
  cov = L * L.transpose();
}

Eigen::Vector3d joint_score(const Eigen::Vector3d& mean, const Eigen::Matrix3d& cov, const Eigen::Vector3d& tau) {
  return -cov.ldlt().solve(tau - mean);
}

Eigen::Vector3d policy_score(const GaussianPolicyParams& pi, const Eigen::Vector3d& tau) {
  const double r = (tau[1] - pi.k * tau[0] - pi.b) / (pi.sd * pi.sd);
  return Eigen::Vector3d(r * pi.k, -r, 0.0);
}

ScoreIdentityResult check_score_identity(const GaussianChain& c, const std::vector<double>& lambdas, int points,
                                         std::uint64_t seed) {
  if (points < 1) throw InvalidArgument("check_score_identity: need at least one point");
  Eigen::Vector3d mo, mt;
  Eigen::Matrix3d co, ct;
  chain_moments(c, c.off, mo, co);
  chain_moments(c, c.target, mt, ct);
  const Eigen::Matrix3d po = co.inverse();
  // log pi_target(a | s0) = -0.5 (u.tau - b)^2 / sd^2 + const, u = (-k, 1, 0).
  const Eigen::Vector3d u(-c.target.k, 1.0, 0.0);
  const double prec_t = 1.0 / (c.target.sd * c.target.sd);

  Rng rng(seed);
  ScoreIdentityResult res;
  for (int i = 0; i < points; ++i) {
    const Eigen::Vector3d tau = mo + 2.0 * co.diagonal().cwiseSqrt().cwiseProduct(rng.normal_vector(3));
    const Eigen::Vector3d lhs = joint_score(mt, ct, tau);
    const Eigen::Vector3d beh = joint_score(mo, co, tau);
    const Eigen::Vector3d rhs = beh + policy_score(c.target, tau) - policy_score(c.off, tau);
    res.identity_error = std::max(res.identity_error, (lhs - rhs).cwiseAbs().maxCoeff());

    for (double l : lambdas) {
      // p_off q_target^lambda is Gaussian with precision P_off + lambda prec u u^T
      // and linear term P_off mu_off + lambda prec b u.
      const Eigen::Matrix3d P = po + l * prec_t * u * u.transpose();
      const Eigen::Vector3d h = po * mo + l * prec_t * c.target.b * u;
      const Eigen::Vector3d completed = h - P * tau;
      const Eigen::Vector3d summed = beh + l * policy_score(c.target, tau);
      const double err = (completed - summed).cwiseAbs().maxCoeff();
      res.lambda_error = std::max(res.lambda_error, err);
      if (l == 0.0) res.lambda0_error = std::max(res.lambda0_error, (summed - beh).cwiseAbs().maxCoeff());
    }
  }
  return res;
}

}  // namespace trajforge::oracle
