#include "trajforge/diffusion/layout.hpp"

#include "trajforge/core/error.hpp"

namespace trajforge::diffusion {

Eigen::MatrixXd to_tensor(const Trajectory& t, const ChannelLayout& layout) {
  if (t.state_dim() != layout.state_dim || t.action_dim() != layout.action_dim)
    throw InvalidArgument("to_tensor: trajectory does not match the channel layout");
  const Index w = t.length();
  Eigen::MatrixXd x(layout.channels(), w);
  x.middleRows(layout.state_offset(), layout.state_dim) = t.states.leftCols(w);
  x.middleRows(layout.action_offset(), layout.action_dim) = t.actions;
  x.row(layout.reward_offset()) = t.rewards.transpose();
  for (Index i = 0; i < w; ++i) x(layout.done_offset(), i) = t.dones[static_cast<std::size_t>(i)];
  x.middleRows(layout.next_state_offset(), layout.state_dim) = t.states.rightCols(w);
  return x;
}

Eigen::RowVectorXd validity_mask(const Trajectory& t) {
  Eigen::RowVectorXd m(t.length());
  for (Index i = 0; i < t.length(); ++i) m[i] = t.padding[static_cast<std::size_t>(i)] ? 0.0 : 1.0;
  return m;
}

Trajectory from_tensor(const Eigen::MatrixXd& x, const ChannelLayout& layout) {
  if (x.rows() != layout.channels()) throw InvalidArgument("from_tensor: channel count mismatch");
  const Index w = x.cols();
  Trajectory t = Trajectory::zeros(layout.state_dim, layout.action_dim, w);
  bool ended = false;
  for (Index i = 0; i < w; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (ended) {
      t.states.col(i + 1) = t.states.col(i);
      t.dones[k] = 1;
      t.padding[k] = 1;
      continue;
    }
    if (i == 0) t.states.col(0) = x.block(layout.state_offset(), 0, layout.state_dim, 1);
    t.actions.col(i) = x.block(layout.action_offset(), i, layout.action_dim, 1);
    t.rewards[i] = x(layout.reward_offset(), i);
    ended = x(layout.done_offset(), i) > 0.5;
    t.dones[k] = ended ? 1 : 0;
    t.states.col(i + 1) =
        ended || i + 1 == w ? x.block(layout.next_state_offset(), i, layout.state_dim, 1)
                            : x.block(layout.state_offset(), i + 1, layout.state_dim, 1);
  }
  return t;
}

Trajectory decode(const Eigen::MatrixXd& x, const ChannelLayout& layout, const NormStats& stats) {
  Dataset d;
  d.state_dim = layout.state_dim;
  d.action_dim = layout.action_dim;
  d.window = x.cols();
  d.norm_stats = stats;
  d.normalized = true;
  d.add(from_tensor(x, layout));
  Trajectory t = denormalize(std::move(d)).trajectories.front();
  for (Index i = 0; i < t.length(); ++i) {
    if (!t.padding[static_cast<std::size_t>(i)]) continue;
    t.actions.col(i).setZero();
    t.rewards[i] = 0.0;
  }
  return t;
}

}  // namespace trajforge::diffusion
