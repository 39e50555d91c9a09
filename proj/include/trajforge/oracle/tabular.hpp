#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "trajforge/envs/tabular_mdp.hpp"

namespace trajforge::oracle {

/// Interleaved (s_0, a_0, s_1, ..., a_{h-1}, s_h).
using TabTrajectory = std::vector<int>;

std::string describe(const TabTrajectory& t);

/// Raised when the target policy puts mass where the behavior policy has none.
class SupportError : public std::runtime_error {
 public:
  SupportError(const std::string& what, std::vector<TabTrajectory> flagged)
      : std::runtime_error(what), flagged_(std::move(flagged)) {}
  const std::vector<TabTrajectory>& flagged() const { return flagged_; }

 private:
  std::vector<TabTrajectory> flagged_;
};

inline constexpr double kEnumerationLimit = 1e6;

/// Every length-h trajectory in a fixed lexicographic order. Refuses (with
/// the size estimate) when the space holds 1e6 or more trajectories.
std::vector<TabTrajectory> enumerate_trajectories(const TabularMDP& mdp, int h);

/// p0(s_0) prod_t pi(a_t | s_t) T(s_{t+1} | s_t, a_t).
double trajectory_probability(const TabularMDP& mdp, const TabularPolicy& pi, const TabTrajectory& t);
/// prod_t pi(a_t | s_t).
double action_product(const TabularPolicy& pi, const TabTrajectory& t);

struct Distribution {
  std::vector<TabTrajectory> trajectories;  // positive-probability ones only
  std::vector<double> probs;
};

Distribution enumerate_distribution(const TabularMDP& mdp, const TabularPolicy& pi, int h);

/// max over trajectories of |p_target - p_off prod_t w(a_t, s_t)|. Throws
/// SupportError listing every trajectory where pi_off is zero but pi_target
/// is not.
double check_importance_identity(const TabularMDP& mdp, const TabularPolicy& off, const TabularPolicy& target, int h);

/// Exact per-trajectory quantities for a behavior/target pair.
struct TrajectoryTable {
  std::vector<TabTrajectory> trajectories;
  std::vector<double> p_off, p_target, q_off, q_target;
  std::vector<double> lambdas;
  std::vector<std::vector<double>> F;  // F[k][i] for lambdas[k]

  std::size_t size() const { return trajectories.size(); }
};

/// Covers every trajectory with positive probability under either policy.
TrajectoryTable build_table(const TabularMDP& mdp, const TabularPolicy& off, const TabularPolicy& target, int h,
                            const std::vector<double>& lambdas);

/// Normalized p_off * q_target^lambda over the table's trajectories.
std::vector<double> behavior_regularized(const TrajectoryTable& table, double lambda);

/// max |p_off q_target - p_target q_off| over the table.
double symmetry_error(const TrajectoryTable& table);

double total_variation(const std::vector<double>& p, const std::vector<double>& q);

/// CSV: tau_index, trajectory, p_off, p_target, q_off, q_target, one F column per lambda.
void write_table_csv(const std::filesystem::path& path, const TrajectoryTable& table);

/// Behavior / target policies used with the default MDP: the behavior favors
/// action 0, the target action 1.
TabularPolicy default_behavior_policy();
TabularPolicy default_target_policy();

/// Noised embedding of the discrete trajectories (indices as reals plus
/// N(0, sigma^2) per element), for h = 1. Returns the densities of a_0 at
/// `point` = (s0, a0, s1) conditioned on (s0, s1) and on s0 alone.
struct ConditionalPair {
  double given_all = 0.0;
  double given_state = 0.0;
};
ConditionalPair noised_action_conditionals(const TabularMDP& mdp, const TabularPolicy& pi, double sigma,
                                           const std::vector<double>& point);

/// |log p_target(x; sigma) - log p_off(x; sigma) - sum_t log w(x_a_t, x_s_t)|
/// at an embedded point, with the weight read off the nearest discrete
/// (s, a). Zero at sigma = 0 on the support, nonzero for sigma > 0.
double noised_factorization_gap(const TabularMDP& mdp, const TabularPolicy& off, const TabularPolicy& target, int h,
                                double sigma, const std::vector<double>& point);

}  // namespace trajforge::oracle
