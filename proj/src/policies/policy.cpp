#include "trajforge/policies/policy.hpp"

#include <cmath>
#include <numbers>

#include "trajforge/core/error.hpp"

namespace trajforge {

namespace {

void check_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) throw InvalidArgument(std::string(what) + ": non-finite input");
}

void check_dims(const Policy& p, const Eigen::VectorXd& s, const Eigen::VectorXd& a) {
  if (s.size() != p.state_dim() || a.size() != p.action_dim()) throw InvalidArgument("policy: dimension mismatch");
  check_finite(s, "policy state");
  check_finite(a, "policy action");
}

}  // namespace

Eigen::MatrixXd Policy::mean_batch(const Eigen::MatrixXd& states) const {
  Eigen::MatrixXd out(action_dim(), states.cols());
  for (Index j = 0; j < states.cols(); ++j) out.col(j) = mean(states.col(j));
  return out;
}

Eigen::MatrixXd DeterministicPolicy::act_batch(const Eigen::MatrixXd& states) const {
  Eigen::MatrixXd out(action_dim(), states.cols());
  for (Index j = 0; j < states.cols(); ++j) out.col(j) = act(states.col(j));
  return out;
}

double log_prob(const Policy& policy, const Eigen::VectorXd& state, const Eigen::VectorXd& action) {
  check_dims(policy, state, action);
  const Eigen::VectorXd ls = policy.log_std();
  const Eigen::VectorXd z = (action - policy.mean(state)).array() / ls.array().exp();
  return -0.5 * z.squaredNorm() - ls.sum() - 0.5 * static_cast<double>(action.size()) * std::log(2.0 * std::numbers::pi);
}

Eigen::VectorXd action_grad_log_prob(const Policy& policy, const Eigen::VectorXd& state,
                                     const Eigen::VectorXd& action) {
  check_dims(policy, state, action);
  const Eigen::ArrayXd var = (2.0 * policy.log_std().array()).exp();
  return (policy.mean(state) - action).array() / var;
}

Eigen::MatrixXd action_grad_log_prob_batch(const Policy& policy, const Eigen::MatrixXd& states,
                                           const Eigen::MatrixXd& actions) {
  if (states.rows() != policy.state_dim() || actions.rows() != policy.action_dim() || states.cols() != actions.cols())
    throw InvalidArgument("policy: batch dimension mismatch");
  const Eigen::ArrayXd inv_var = (-2.0 * policy.log_std().array()).exp();
  Eigen::MatrixXd g = policy.mean_batch(states) - actions;
  g.array().colwise() *= inv_var;
  return g;
}

Eigen::VectorXd log_prob_batch(const Policy& policy, const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) {
  if (states.rows() != policy.state_dim() || actions.rows() != policy.action_dim() || states.cols() != actions.cols())
    throw InvalidArgument("policy: batch dimension mismatch");
  const Eigen::VectorXd ls = policy.log_std();
  const Eigen::ArrayXd inv_std = (-ls.array()).exp();
  Eigen::MatrixXd z = actions - policy.mean_batch(states);
  z.array().colwise() *= inv_std;
  const double c = -ls.sum() - 0.5 * static_cast<double>(actions.rows()) * std::log(2.0 * std::numbers::pi);
  return (-0.5 * z.colwise().squaredNorm().array() + c).matrix().transpose();
}

Eigen::VectorXd sample(const Policy& policy, const Eigen::VectorXd& state, Rng& rng) {
  const Eigen::VectorXd mu = policy.mean(state);
  const Eigen::VectorXd eps = rng.normal_vector(mu.size());
  return mu.array() + policy.log_std().array().exp() * eps.array();
}

double expected_log_prob(const Policy& policy) {
  const Eigen::VectorXd ls = policy.log_std();
  double total = 0.0;
  for (Index i = 0; i < ls.size(); ++i) total += -0.5 * (1.0 + std::log(2.0 * std::numbers::pi) + 2.0 * ls[i]);
  return total;
}

FunctionPolicy::FunctionPolicy(Index state_dim, Index action_dim, MeanFn mean, Eigen::VectorXd log_std)
    : state_dim_(state_dim), action_dim_(action_dim), mean_(std::move(mean)), log_std_(std::move(log_std)) {
  if (log_std_.size() != action_dim_) throw InvalidArgument("FunctionPolicy: log_std size mismatch");
}

DeterministicAsGaussian::DeterministicAsGaussian(std::shared_ptr<const DeterministicPolicy> base, double std)
    : DeterministicAsGaussian(base, Eigen::VectorXd::Constant(base->action_dim(), std)) {}

DeterministicAsGaussian::DeterministicAsGaussian(std::shared_ptr<const DeterministicPolicy> base, Eigen::VectorXd std)
    : base_(std::move(base)), log_std_(std.array().log()) {
  if (!base_) throw InvalidArgument("DeterministicAsGaussian: null base");
  if (std.size() != base_->action_dim() || (std.array() <= 0.0).any())
    throw InvalidArgument("DeterministicAsGaussian: std must be positive per action dimension");
}

NormalizedPolicyView::NormalizedPolicyView(std::shared_ptr<const Policy> base, NormStats stats)
    : base_(std::move(base)), stats_(std::move(stats)) {
  if (stats_.state_mean.size() != base_->state_dim() || stats_.action_mean.size() != base_->action_dim())
    throw InvalidArgument("NormalizedPolicyView: stats do not match policy dimensions");
}

Eigen::VectorXd NormalizedPolicyView::mean(const Eigen::VectorXd& state) const {
  const Eigen::VectorXd raw = state.cwiseProduct(stats_.state_std) + stats_.state_mean;
  return (base_->mean(raw) - stats_.action_mean).cwiseQuotient(stats_.action_std);
}

Eigen::MatrixXd NormalizedPolicyView::mean_batch(const Eigen::MatrixXd& states) const {
  Eigen::MatrixXd raw = (states.array().colwise() * stats_.state_std.array()).colwise() + stats_.state_mean.array();
  Eigen::MatrixXd m = base_->mean_batch(raw);
  return (m.colwise() - stats_.action_mean).array().colwise() / stats_.action_std.array();
}

Eigen::VectorXd NormalizedPolicyView::log_std() const {
  return base_->log_std().array() - stats_.action_std.array().log();
}

}  // namespace trajforge
