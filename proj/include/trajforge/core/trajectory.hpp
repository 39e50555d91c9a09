#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

namespace trajforge {

using Eigen::Index;

/// Fixed-length window of transitions. Column t of `actions` is the action
/// taken in state column t; `states` carries one extra column for the state
/// reached after the last transition.
///
/// Padding is only ever a suffix. Padded transitions repeat the last real
/// state, carry zero action and reward, and are excluded from every loss and
/// metric.
struct Trajectory {
  Eigen::MatrixXd states;             // state_dim x (W + 1)
  Eigen::MatrixXd actions;            // action_dim x W
  Eigen::VectorXd rewards;            // W
  std::vector<std::uint8_t> dones;    // W, 0 or 1
  std::vector<std::uint8_t> padding;  // W, 0 or 1
  std::int64_t t0 = 0;                // episode timestep of states.col(0)

  static Trajectory zeros(Index state_dim, Index action_dim, Index length);

  Index length() const { return actions.cols(); }
  Index state_dim() const { return states.rows(); }
  Index action_dim() const { return actions.rows(); }
  /// Number of non-padding transitions.
  Index valid_length() const;
  /// Throws InvalidArgument when a structural invariant is broken.
  void validate() const;

  friend bool operator==(const Trajectory& a, const Trajectory& b);
};

struct NormStats {
  Eigen::VectorXd state_mean, state_std;
  Eigen::VectorXd action_mean, action_std;
  double reward_mean = 0.0;
  double reward_std = 1.0;
  std::vector<std::string> warnings;

  friend bool operator==(const NormStats& a, const NormStats& b);
};

struct Dataset {
  std::vector<Trajectory> trajectories;
  Index window = 16;
  Index state_dim = 0;
  Index action_dim = 0;
  std::optional<NormStats> norm_stats;
  bool normalized = false;
  std::string source_tag;

  std::size_t size() const { return trajectories.size(); }
  bool empty() const { return trajectories.empty(); }
  /// Appends a trajectory after checking it against the dataset's shape.
  void add(Trajectory t);

  friend bool operator==(const Dataset& a, const Dataset& b);
};

inline constexpr double kDefaultStdFloor = 1e-6;

/// Cuts an episode into windows of `window` transitions starting every
/// `stride` steps. The final window is right-padded when it runs past the
/// episode's last real transition.
std::vector<Trajectory> window(const Trajectory& episode, Index window, Index stride);

/// Per-dimension population mean and standard deviation over non-padding
/// entries. Standard deviations below `floor` are clamped and reported.
NormStats compute_norm_stats(const Dataset& d, double floor = kDefaultStdFloor);

/// Z-scores states, actions and rewards. Computes stats when absent; a dataset
/// already marked normalized is returned unchanged.
Dataset normalize(Dataset d, double floor = kDefaultStdFloor);
Dataset denormalize(Dataset d);

nlohmann::json to_json(const NormStats& s);
NormStats norm_stats_from_json(const nlohmann::json& j);

void save(const Dataset& d, const std::filesystem::path& path);
Dataset load(const std::filesystem::path& path);

}  // namespace trajforge
