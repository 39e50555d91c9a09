#include "trajforge/agent/buffer.hpp"

#include "trajforge/core/error.hpp"

namespace trajforge::agent {

void TransitionBuffer::add(const Dataset& d, int epoch) {
  if (!parts_.empty() && parts_.front().data.states.rows() != d.state_dim)
    throw InvalidArgument("TransitionBuffer: dataset dimensions differ from buffered data");
  const Dataset raw = d.normalized ? denormalize(d) : d;
  Part p{epoch, extract_transitions(raw), {}};
  for (const auto& t : raw.trajectories) padding_skipped_ += t.length() - t.valid_length();
  p.padding.assign(p.data.size(), 0);
  parts_.push_back(std::move(p));
}

void TransitionBuffer::retain_from(int min_epoch) {
  while (!parts_.empty() && parts_.front().epoch < min_epoch) parts_.pop_front();
}

std::size_t TransitionBuffer::size() const {
  std::size_t n = 0;
  for (const auto& p : parts_) n += p.data.size();
  return n;
}

Transitions TransitionBuffer::sample(int batch, Rng& rng) {
  const std::size_t total = size();
  if (total == 0) throw InvalidState("TransitionBuffer::sample: buffer is empty");
  const Part& first = parts_.front();
  Transitions out;
  out.states.resize(first.data.states.rows(), batch);
  out.actions.resize(first.data.actions.rows(), batch);
  out.next_states.resize(first.data.states.rows(), batch);
  out.rewards.resize(batch);
  out.dones.resize(static_cast<std::size_t>(batch));
  for (Index j = 0; j < batch; ++j) {
    std::size_t i = rng.index(total);
    const Part* part = nullptr;
    for (const auto& p : parts_) {
      if (i < p.data.size()) {
        part = &p;
        break;
      }
      i -= p.data.size();
    }
    const auto c = static_cast<Index>(i);
    out.states.col(j) = part->data.states.col(c);
    out.actions.col(j) = part->data.actions.col(c);
    out.next_states.col(j) = part->data.next_states.col(c);
    out.rewards[j] = part->data.rewards[c];
    out.dones[static_cast<std::size_t>(j)] = part->data.dones[i];
    padding_sampled_ += part->padding[i];
  }
  return out;
}

}  // namespace trajforge::agent
