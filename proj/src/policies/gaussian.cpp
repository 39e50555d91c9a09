#include "trajforge/policies/gaussian.hpp"

#include "trajforge/core/container.hpp"
#include "trajforge/core/error.hpp"
#include "trajforge/nn/checkpoint.hpp"

namespace trajforge {

namespace {

std::vector<Index> widths_of(Index in, const std::vector<Index>& hidden, Index out) {
  std::vector<Index> w{in};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(out);
  return w;
}

}  // namespace

GaussianPolicy::GaussianPolicy(Index state_dim, Index action_dim, std::vector<Index> hidden, Rng& rng, double log_std,
                               double action_bound)
    : net_(widths_of(state_dim, hidden, action_dim), rng, nn::OutputActivation::tanh),
      log_std_("log_std", nn::Matrix::Constant(action_dim, 1, log_std)),
      bound_(action_bound) {
  if (!(action_bound > 0.0)) throw InvalidArgument("GaussianPolicy: action bound must be positive");
}

Eigen::VectorXd GaussianPolicy::mean(const Eigen::VectorXd& state) const {
  if (state.size() != state_dim()) throw InvalidArgument("GaussianPolicy: state dimension mismatch");
  return bound_ * net_.infer(state).col(0);
}

Eigen::MatrixXd GaussianPolicy::mean_batch(const Eigen::MatrixXd& states) const { return bound_ * net_.infer(states); }

nn::ParamList GaussianPolicy::params() {
  nn::ParamList p = net_.params();
  p.push_back(&log_std_);
  return p;
}

void GaussianPolicy::save(const std::filesystem::path& path) {
  std::vector<double> ls(log_std_.value.data(), log_std_.value.data() + log_std_.value.size());
  nlohmann::json meta{{"arch", "gaussian_mlp"},
                      {"dims", net_.widths()},
                      {"log_std", ls},
                      {"action_bound", bound_}};
  nn::save_params(path, params(), meta);
}

GaussianPolicy GaussianPolicy::load(const std::filesystem::path& path) {
  const nlohmann::json meta = nn::read_checkpoint_meta(path);
  if (meta.value("arch", "") != "gaussian_mlp")
    throw LoadError(LoadErrorKind::malformed_header, "checkpoint is not a gaussian_mlp policy");
  const auto dims = meta.at("dims").get<std::vector<Index>>();
  if (dims.size() < 2) throw LoadError(LoadErrorKind::malformed_header, "policy dims too short");
  Rng rng(0);
  GaussianPolicy p(dims.front(), dims.back(), std::vector<Index>(dims.begin() + 1, dims.end() - 1), rng, 0.0,
                   meta.value("action_bound", 1.0));
  nn::load_params(path, p.params());
  return p;
}

}  // namespace trajforge
