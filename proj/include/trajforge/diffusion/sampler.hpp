#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "trajforge/core/trajectory.hpp"
#include "trajforge/diffusion/denoiser.hpp"
#include "trajforge/diffusion/layout.hpp"
#include "trajforge/diffusion/schedule.hpp"
#include "trajforge/policies/policy.hpp"

namespace trajforge::diffusion {

class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Emitted once per trajectory and step where guidance is evaluated.
struct GuidanceEvent {
  std::size_t trajectory = 0;
  int step = 0;
  double weight = 0.0;
  Eigen::MatrixXd gradient;  // action_dim x W at the denoised point
  Eigen::MatrixXd applied;   // the increment added to the noised actions
  bool skipped = false;
};

struct SamplerConfig {
  NoiseSchedule schedule;
  GuidanceConfig guidance;
  int workers = 1;
  /// Trajectories denoised together; fixed so results do not depend on workers.
  int chunk = 256;
  std::uint64_t seed = 0;
  /// Inspection hook, called from worker threads (must be thread-safe).
  std::function<void(const GuidanceEvent&)> on_guidance;
};

struct SamplerStats {
  std::int64_t guidance_steps = 0;
  std::int64_t zero_gradient_skips = 0;
  std::int64_t denoiser_calls = 0;
};

/// Stochastic Heun sampler with optional policy guidance on the action
/// channels. Returns `count` tensors (channels x length) in the denoiser's
/// normalized space. Trajectory i uses the stream derive_seed(seed, i), so
/// the result for a given index does not depend on `count` or `workers`.
/// `policy` (normalized coordinates) may be null for unguided sampling.
std::vector<Eigen::MatrixXd> sample_tensors(const Denoiser& denoiser, Index length, std::size_t count,
                                            const SamplerConfig& cfg, const Policy* policy = nullptr,
                                            const ChannelLayout* layout = nullptr, SamplerStats* stats = nullptr);

/// Samples and decodes trajectories into a raw-unit dataset.
Dataset sample_guided(const Denoiser& denoiser, const Policy* policy, const ChannelLayout& layout,
                      const NormStats& stats, Index length, std::size_t count, const SamplerConfig& cfg,
                      SamplerStats* sampler_stats = nullptr);

/// Behavior score plus, when `policy` is given, the action-masked term
/// grad_a sum_t log pi(a_t | s_t) evaluated at the noised trajectory.
Eigen::MatrixXd guided_score(const Denoiser& d, const Eigen::MatrixXd& x, double sigma, const Policy* policy,
                             const ChannelLayout& layout);

/// grad over actions of sum_t log pi(a_t | s_t) for a tensor's state/action channels.
Eigen::MatrixXd action_guidance_gradient(const Policy& policy, const Eigen::MatrixXd& x, const ChannelLayout& layout);

}  // namespace trajforge::diffusion
