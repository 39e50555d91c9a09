#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "trajforge/core/trajectory.hpp"

namespace trajforge {

/// Flat (s, a, r, s', done) table, one transition per column.
struct Transitions {
  Eigen::MatrixXd states;
  Eigen::MatrixXd actions;
  Eigen::VectorXd rewards;
  Eigen::MatrixXd next_states;
  std::vector<std::uint8_t> dones;

  std::size_t size() const { return static_cast<std::size_t>(states.cols()); }
  bool empty() const { return states.cols() == 0; }
};

/// Non-padding transitions of every trajectory, in dataset order.
Transitions extract_transitions(const Dataset& d);

/// Column concatenation; both sides must share dimensions (or one be empty).
Transitions concat(const Transitions& a, const Transitions& b);

}  // namespace trajforge
