#pragma once

#include <Eigen/Core>

#include "trajforge/core/trajectory.hpp"

namespace trajforge::diffusion {

/// One tensor column per transition: [s_t | a_t | r_t | done_t | s_{t+1}].
struct ChannelLayout {
  Index state_dim = 0;
  Index action_dim = 0;

  Index channels() const { return 2 * state_dim + action_dim + 2; }
  Index state_offset() const { return 0; }
  Index action_offset() const { return state_dim; }
  Index reward_offset() const { return state_dim + action_dim; }
  Index done_offset() const { return state_dim + action_dim + 1; }
  Index next_state_offset() const { return state_dim + action_dim + 2; }
};

/// Encodes a (normalized) trajectory as a channels x W tensor.
Eigen::MatrixXd to_tensor(const Trajectory& t, const ChannelLayout& layout);

/// Per-column validity (1 for real transitions, 0 for padding).
Eigen::RowVectorXd validity_mask(const Trajectory& t);

/// Decodes a tensor. Done is thresholded at 0.5; every transition after the
/// first done becomes padding.
Trajectory from_tensor(const Eigen::MatrixXd& x, const ChannelLayout& layout);

/// Applies `from_tensor` and maps back to raw units through `stats`.
Trajectory decode(const Eigen::MatrixXd& x, const ChannelLayout& layout, const NormStats& stats);

}  // namespace trajforge::diffusion
