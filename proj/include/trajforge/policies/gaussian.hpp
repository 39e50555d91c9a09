#pragma once

#include <filesystem>
#include <vector>

#include "trajforge/nn/mlp.hpp"
#include "trajforge/policies/policy.hpp"

namespace trajforge {

/// Gaussian policy with mean bound * tanh(mlp(s)) and learnable log std.
class GaussianPolicy final : public Policy {
 public:
  GaussianPolicy(Index state_dim, Index action_dim, std::vector<Index> hidden, Rng& rng, double log_std = 0.0,
                 double action_bound = 1.0);

  Index state_dim() const override { return net_.in(); }
  Index action_dim() const override { return net_.out(); }
  Eigen::VectorXd mean(const Eigen::VectorXd& state) const override;
  Eigen::MatrixXd mean_batch(const Eigen::MatrixXd& states) const override;
  Eigen::VectorXd log_std() const override { return log_std_.value.col(0); }

  nn::Mlp& network() { return net_; }
  nn::Param& log_std_param() { return log_std_; }
  double action_bound() const { return bound_; }
  nn::ParamList params();

  void save(const std::filesystem::path& path);
  static GaussianPolicy load(const std::filesystem::path& path);

 private:
  nn::Mlp net_;
  nn::Param log_std_;
  double bound_ = 1.0;
};

}  // namespace trajforge
