#pragma once

#include <cstddef>
#include <vector>

#include "trajforge/core/random.hpp"
#include "trajforge/core/trajectory.hpp"

namespace trajforge {

/// Row-stochastic table pi[s][a], stored row-major (n_states x n_actions).
struct TabularPolicy {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> probs;

  double operator()(int s, int a) const { return probs[static_cast<std::size_t>(s * n_actions + a)]; }
  double& at(int s, int a) { return probs[static_cast<std::size_t>(s * n_actions + a)]; }

  static TabularPolicy uniform(int n_states, int n_actions);
  /// Each row drawn from a flat Dirichlet.
  static TabularPolicy random(int n_states, int n_actions, Rng& rng);
  void validate() const;
};

/// Small finite MDP whose trajectory space can be enumerated exactly.
struct TabularMDP {
  int n_states = 3;
  int n_actions = 2;
  int horizon = 3;
  double discount = 0.99;
  std::vector<double> transitions;  // [s][a][s'] row-major
  std::vector<double> rewards;      // [s][a]
  std::vector<double> initial;      // p0[s]

  double T(int s, int a, int next) const {
    return transitions[static_cast<std::size_t>((s * n_actions + a) * n_states + next)];
  }
  double R(int s, int a) const { return rewards[static_cast<std::size_t>(s * n_actions + a)]; }

  /// Throws InvalidArgument unless every row of T and p0 sums to 1 within
  /// 1e-12 and the trajectory space is below the enumeration limit.
  void validate() const;
  /// (n_states * n_actions)^horizon * n_states.
  double trajectory_space_size() const;

  /// Default 3-state, 2-action, horizon-3 instance used by the oracle checks.
  static TabularMDP default_instance();
  static TabularMDP random(int n_states, int n_actions, int horizon, Rng& rng);
  /// Every transition deterministic: next = (s + a + 1) mod n_states.
  static TabularMDP deterministic(int n_states, int n_actions, int horizon);
};

struct TabularStep {
  int next_state = 0;
  double reward = 0.0;
  bool done = false;
};

TabularStep step(const TabularMDP& mdp, int state, int action, Rng& rng);
int sample_initial_state(const TabularMDP& mdp, Rng& rng);

/// Episode as a Trajectory with 1-D state (index) and 1-D action (index).
Trajectory rollout(const TabularMDP& mdp, const TabularPolicy& policy, int initial_state, Index n_steps, Rng& rng);

}  // namespace trajforge
