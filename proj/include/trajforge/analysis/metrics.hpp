#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "trajforge/core/trajectory.hpp"
#include "trajforge/envs/point_mass.hpp"
#include "trajforge/policies/policy.hpp"

namespace trajforge::analysis {

struct Aggregate {
  double mean = 0.0;
  /// Standard error of the mean; 0 for a single sample.
  double se = 0.0;
  std::size_t n = 0;
};

Aggregate aggregate(const std::vector<double>& values);

struct LikelihoodResult {
  std::vector<double> per_trajectory;  // mean log pi(a_t | s_t) over non-padding t
  Aggregate aggregate;
};

/// Per-trajectory mean action log-likelihood, then mean and standard error
/// across trajectories. Trajectories without real transitions are skipped.
LikelihoodResult trajectory_likelihood(const Policy& policy, const Dataset& d);

/// Same, in the normalized action units of `stats`: `policy` acts on raw
/// states and actions, `d` may be raw or normalized.
LikelihoodResult trajectory_likelihood_normalized(std::shared_ptr<const Policy> policy, const Dataset& d,
                                                  const NormStats& stats);

struct DynamicsError {
  Eigen::VectorXd mse;  // W entries; entry j is the error of state j + 1
  Eigen::VectorXd se;
  std::vector<std::size_t> counts;  // trajectories contributing to each step
};

/// Replays each trajectory's actions from its first state in the noise-free
/// oracle and averages the squared state error per step over trajectories
/// (per state dimension). Steps with no contributing trajectory are NaN.
DynamicsError dynamics_error(const PointMass2D& oracle, const Dataset& d);

/// Occupancy of a cells x cells grid over the position square [-1, 1]^2.
class CoverageGrid {
 public:
  explicit CoverageGrid(int cells = 32);

  void add(const Dataset& d);
  void merge(const CoverageGrid& other);
  std::size_t occupied() const;
  bool at(int i, int j) const { return cells_[static_cast<std::size_t>(i * n_ + j)] != 0; }
  int cells() const { return n_; }
  /// Fraction of all cells occupied here but not in `reference`.
  double beyond(const CoverageGrid& reference) const;

 private:
  int n_;
  std::vector<std::uint8_t> cells_;
};

double coverage_beyond(const Dataset& d, const Dataset& behavior, int cells = 32);

}  // namespace trajforge::analysis
