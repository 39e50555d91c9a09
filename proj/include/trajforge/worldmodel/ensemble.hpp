#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "trajforge/core/random.hpp"
#include "trajforge/core/trajectory.hpp"
#include "trajforge/nn/mlp.hpp"
#include "trajforge/policies/policy.hpp"

namespace trajforge::worldmodel {

struct EnsembleConfig {
  int members = 5;
  int elites = 3;
  std::vector<Index> hidden{64, 64};
  /// Bounds of the predicted log-variance, in normalized target units.
  double min_logvar = -10.0;
  double max_logvar = 0.5;
  /// Optimizer steps per member.
  std::int64_t steps = 3000;
  int batch = 256;
  double lr = 1e-3;
  double holdout_fraction = 0.1;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Raw-unit predictions for a batch of (state, action) columns.
struct Prediction {
  Eigen::MatrixXd delta_mean;  // state_dim x n
  Eigen::MatrixXd delta_var;   // state_dim x n
  Eigen::RowVectorXd reward;   // n
  Eigen::MatrixXd logvar;      // state_dim x n, normalized units
};

/// Probabilistic ensemble over (delta state, reward). Each member maps the
/// z-scored (s, a) to the z-scored delta-state mean, its bounded log-variance
/// and the reward mean.
class EnsembleDynamics {
 public:
  EnsembleDynamics() = default;
  EnsembleDynamics(Index state_dim, Index action_dim, EnsembleConfig cfg);

  Index state_dim() const { return state_dim_; }
  Index action_dim() const { return action_dim_; }
  const EnsembleConfig& config() const { return cfg_; }
  int members() const { return static_cast<int>(nets_.size()); }
  const std::vector<int>& elites() const { return elites_; }

  Prediction predict(int member, const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) const;
  /// Variance across members of the predicted next-state mean, averaged over
  /// state dimensions; one value per column.
  Eigen::VectorXd disagreement(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) const;

  nn::Mlp& member(int i) { return nets_[static_cast<std::size_t>(i)]; }
  nn::ParamList params();

  void save(const std::filesystem::path& path);
  static EnsembleDynamics load(const std::filesystem::path& path);

 private:
  friend EnsembleDynamics train_ensemble(const Dataset&, const EnsembleConfig&, std::vector<double>*);

  Eigen::MatrixXd inputs(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) const;

  Index state_dim_ = 0, action_dim_ = 0;
  EnsembleConfig cfg_;
  std::vector<nn::Mlp> nets_;
  std::vector<int> elites_;
  Eigen::VectorXd in_mean_, in_std_, out_mean_, out_std_;
};

/// Trains every member on its own bootstrap resample with a Gaussian NLL and
/// picks elites by held-out mean-squared error. `dataset` may be raw or
/// normalized; the model always works in raw units. `final_logvar` receives
/// the mean predicted log-variance per member on the training inputs.
EnsembleDynamics train_ensemble(const Dataset& dataset, const EnsembleConfig& cfg,
                                std::vector<double>* final_logvar = nullptr);

enum class StartMode { initial_states, any_timestep };

StartMode parse_start_mode(const std::string& name);
std::string to_string(StartMode mode);

struct TruncatedRolloutConfig {
  int k = 5;
  StartMode start = StartMode::any_timestep;
  std::size_t count = 1024;
  /// Output window; 0 means k.
  Index window = 0;
  /// Actions are clipped to [-bound, bound] as the environment would; 0 disables.
  double action_bound = 1.0;
  bool deterministic_policy = false;
  std::uint64_t seed = 0;
  int workers = 1;
};

struct RolloutResult {
  Dataset data;  // raw units, source tag "worldmodel"
  std::vector<std::size_t> truncated;
};

/// Start states drawn uniformly from `d` (columns of a state_dim x count
/// matrix). Episode starts (t0 == 0) only, or any non-padding state; the
/// second argument receives each start's episode timestep.
Eigen::MatrixXd sample_start_states(const Dataset& d, StartMode mode, std::size_t count, Rng& rng,
                                    std::vector<std::int64_t>* t0 = nullptr);

/// k-step model rollouts under `policy` from dataset start states. Each step
/// picks one elite uniformly at random and samples its Gaussian. A
/// non-finite prediction ends that rollout early and is reported.
RolloutResult rollout_truncated(const EnsembleDynamics& model, const Policy& policy, const Dataset& dataset,
                                const TruncatedRolloutConfig& cfg);

}  // namespace trajforge::worldmodel
