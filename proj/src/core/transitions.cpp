#include "trajforge/core/transitions.hpp"

#include "trajforge/core/error.hpp"

namespace trajforge {

Transitions extract_transitions(const Dataset& d) {
  Index n = 0;
  for (const auto& t : d.trajectories) n += t.valid_length();
  Transitions out;
  out.states.resize(d.state_dim, n);
  out.actions.resize(d.action_dim, n);
  out.rewards.resize(n);
  out.next_states.resize(d.state_dim, n);
  out.dones.reserve(static_cast<std::size_t>(n));
  Index c = 0;
  for (const auto& t : d.trajectories) {
    const Index len = t.valid_length();
    out.states.middleCols(c, len) = t.states.leftCols(len);
    out.next_states.middleCols(c, len) = t.states.middleCols(1, len);
    out.actions.middleCols(c, len) = t.actions.leftCols(len);
    out.rewards.segment(c, len) = t.rewards.head(len);
    for (Index i = 0; i < len; ++i) out.dones.push_back(t.dones[static_cast<std::size_t>(i)]);
    c += len;
  }
  return out;
}

Transitions concat(const Transitions& a, const Transitions& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.states.rows() != b.states.rows() || a.actions.rows() != b.actions.rows())
    throw InvalidArgument("concat: transition dimensions differ");
  Transitions out;
  auto join = [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    Eigen::MatrixXd m(x.rows(), x.cols() + y.cols());
    m << x, y;
    return m;
  };
  out.states = join(a.states, b.states);
  out.actions = join(a.actions, b.actions);
  out.next_states = join(a.next_states, b.next_states);
  out.rewards.resize(a.rewards.size() + b.rewards.size());
  out.rewards << a.rewards, b.rewards;
  out.dones = a.dones;
  out.dones.insert(out.dones.end(), b.dones.begin(), b.dones.end());
  return out;
}

}  // namespace trajforge
