#pragma once

#include <cstdint>
#include <deque>

#include "trajforge/core/random.hpp"
#include "trajforge/core/transitions.hpp"
#include "trajforge/core/trajectory.hpp"

namespace trajforge::agent {

/// Replay buffer of per-epoch datasets. Only non-padding transitions are
/// stored; minibatches are drawn uniformly over everything held.
class TransitionBuffer {
 public:
  void add(const Dataset& d, int epoch);
  /// Drops datasets generated before `min_epoch`.
  void retain_from(int min_epoch);
  void clear() { parts_.clear(); }

  std::size_t size() const;
  bool empty() const { return size() == 0; }
  std::size_t datasets() const { return parts_.size(); }
  /// Epoch of the oldest dataset held; -1 when empty.
  int oldest_epoch() const { return parts_.empty() ? -1 : parts_.front().epoch; }

  Transitions sample(int batch, Rng& rng);

  /// Padded transitions seen (and skipped) by add().
  std::int64_t padding_skipped() const { return padding_skipped_; }
  /// Padded transitions that reached a minibatch; must stay 0.
  std::int64_t padding_sampled() const { return padding_sampled_; }

 private:
  struct Part {
    int epoch;
    Transitions data;
    std::vector<std::uint8_t> padding;
  };
  std::deque<Part> parts_;
  std::int64_t padding_skipped_ = 0;
  std::int64_t padding_sampled_ = 0;
};

}  // namespace trajforge::agent
