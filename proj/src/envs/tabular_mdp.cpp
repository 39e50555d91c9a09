#include "trajforge/envs/tabular_mdp.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "trajforge/core/error.hpp"

namespace trajforge {

namespace {

constexpr double kRowTolerance = 1e-12;
constexpr double kMaxTrajectories = 1e6;

std::vector<double> dirichlet_row(int n, Rng& rng) {
  std::gamma_distribution<double> gamma(1.0, 1.0);
  std::vector<double> row(static_cast<std::size_t>(n));
  double total = 0.0;
  for (auto& v : row) total += (v = gamma(rng.engine()));
  for (auto& v : row) v /= total;
  return row;
}

int sample_categorical(const double* probs, int n, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  // Rounding left u above the cumulative sum: fall back to the last
  // non-zero entry.
  for (int i = n - 1; i >= 0; --i)
    if (probs[i] > 0.0) return i;
  return n - 1;
}

void check_row(const double* row, int n, const std::string& what) {
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!(row[i] >= 0.0)) throw InvalidArgument(what + ": negative or non-finite probability");
    total += row[i];
  }
  if (std::abs(total - 1.0) > kRowTolerance) throw InvalidArgument(what + ": row does not sum to 1");
}

}  // namespace

TabularPolicy TabularPolicy::uniform(int n_states, int n_actions) {
  return {n_states, n_actions,
          std::vector<double>(static_cast<std::size_t>(n_states * n_actions), 1.0 / n_actions)};
}

TabularPolicy TabularPolicy::random(int n_states, int n_actions, Rng& rng) {
  TabularPolicy p{n_states, n_actions, {}};
  for (int s = 0; s < n_states; ++s) {
    auto row = dirichlet_row(n_actions, rng);
    p.probs.insert(p.probs.end(), row.begin(), row.end());
  }
  return p;
}

void TabularPolicy::validate() const {
  if (static_cast<int>(probs.size()) != n_states * n_actions) throw InvalidArgument("TabularPolicy: wrong table size");
  for (int s = 0; s < n_states; ++s) check_row(&probs[static_cast<std::size_t>(s * n_actions)], n_actions, "TabularPolicy");
}

double TabularMDP::trajectory_space_size() const {
  return std::pow(static_cast<double>(n_states) * n_actions, horizon) * n_states;
}

void TabularMDP::validate() const {
  if (n_states < 1 || n_actions < 1 || horizon < 1) throw InvalidArgument("TabularMDP: sizes must be positive");
  if (transitions.size() != static_cast<std::size_t>(n_states * n_actions * n_states) ||
      rewards.size() != static_cast<std::size_t>(n_states * n_actions) ||
      initial.size() != static_cast<std::size_t>(n_states))
    throw InvalidArgument("TabularMDP: table sizes do not match n_states/n_actions");
  for (int sa = 0; sa < n_states * n_actions; ++sa)
    check_row(&transitions[static_cast<std::size_t>(sa * n_states)], n_states, "TabularMDP transition");
  check_row(initial.data(), n_states, "TabularMDP initial distribution");
  if (!(discount > 0.0 && discount <= 1.0)) throw InvalidArgument("TabularMDP: discount must be in (0, 1]");
  if (trajectory_space_size() >= kMaxTrajectories)
    throw InvalidArgument("TabularMDP: trajectory space too large to enumerate (" +
                          std::to_string(trajectory_space_size()) + ")");
}

TabularMDP TabularMDP::default_instance() {
  TabularMDP m;
  m.n_states = 3;
  m.n_actions = 2;
  m.horizon = 3;
  m.discount = 0.99;
  // Action 0 mostly stays / drifts left, action 1 mostly moves right.
  m.transitions = {
      // s = 0
      0.8, 0.2, 0.0,  // a = 0
      0.1, 0.7, 0.2,  // a = 1
      // s = 1
      0.6, 0.3, 0.1,  // a = 0
      0.0, 0.2, 0.8,  // a = 1
      // s = 2
      0.1, 0.6, 0.3,  // a = 0
      0.0, 0.1, 0.9,  // a = 1
  };
  m.rewards = {0.0, 0.0, 0.0, 0.5, 0.2, 1.0};
  m.initial = {0.6, 0.3, 0.1};
  return m;
}

TabularMDP TabularMDP::random(int n_states, int n_actions, int horizon, Rng& rng) {
  TabularMDP m;
  m.n_states = n_states;
  m.n_actions = n_actions;
  m.horizon = horizon;
  for (int sa = 0; sa < n_states * n_actions; ++sa) {
    auto row = dirichlet_row(n_states, rng);
    m.transitions.insert(m.transitions.end(), row.begin(), row.end());
    m.rewards.push_back(rng.uniform(-1.0, 1.0));
  }
  m.initial = dirichlet_row(n_states, rng);
  return m;
}

TabularMDP TabularMDP::deterministic(int n_states, int n_actions, int horizon) {
  TabularMDP m;
  m.n_states = n_states;
  m.n_actions = n_actions;
  m.horizon = horizon;
  m.transitions.assign(static_cast<std::size_t>(n_states * n_actions * n_states), 0.0);
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) {
      m.transitions[static_cast<std::size_t>((s * n_actions + a) * n_states + (s + a + 1) % n_states)] = 1.0;
      m.rewards.push_back(static_cast<double>(a));
    }
  m.initial.assign(static_cast<std::size_t>(n_states), 0.0);
  m.initial[0] = 1.0;
  return m;
}

TabularStep step(const TabularMDP& mdp, int state, int action, Rng& rng) {
  if (state < 0 || state >= mdp.n_states || action < 0 || action >= mdp.n_actions)
    throw InvalidArgument("TabularMDP step: state or action out of range");
  TabularStep r;
  r.next_state = sample_categorical(&mdp.transitions[static_cast<std::size_t>((state * mdp.n_actions + action) * mdp.n_states)],
                                    mdp.n_states, rng);
  r.reward = mdp.R(state, action);
  return r;
}

int sample_initial_state(const TabularMDP& mdp, Rng& rng) {
  return sample_categorical(mdp.initial.data(), mdp.n_states, rng);
}

Trajectory rollout(const TabularMDP& mdp, const TabularPolicy& policy, int initial_state, Index n_steps, Rng& rng) {
  if (n_steps < 1) throw InvalidArgument("rollout: n_steps must be >= 1");
  Trajectory t = Trajectory::zeros(1, 1, n_steps);
  int s = initial_state;
  t.states(0, 0) = s;
  bool finished = false;
  for (Index i = 0; i < n_steps; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (finished) {
      t.states(0, i + 1) = s;
      t.dones[k] = 1;
      t.padding[k] = 1;
      continue;
    }
    const int a = sample_categorical(&policy.probs[static_cast<std::size_t>(s * policy.n_actions)], policy.n_actions, rng);
    const TabularStep r = step(mdp, s, a, rng);
    t.actions(0, i) = a;
    t.rewards[i] = r.reward;
    s = r.next_state;
    t.states(0, i + 1) = s;
    finished = i + 1 >= mdp.horizon;
    t.dones[k] = finished ? 1 : 0;
  }
  return t;
}

}  // namespace trajforge
