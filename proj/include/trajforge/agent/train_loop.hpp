#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "trajforge/agent/buffer.hpp"
#include "trajforge/agent/td3bc.hpp"
#include "trajforge/diffusion/denoiser.hpp"
#include "trajforge/diffusion/layout.hpp"
#include "trajforge/diffusion/sampler.hpp"
#include "trajforge/envs/point_mass.hpp"
#include "trajforge/worldmodel/ensemble.hpp"

namespace trajforge::agent {

enum class Source { real, unguided, guided, worldmodel };
enum class Regime { periodic, continuous };

Source parse_source(const std::string& name);
std::string to_string(Source s);
Regime parse_regime(const std::string& name);
std::string to_string(Regime r);

struct TrainLoopConfig {
  int epochs = 4;
  std::int64_t steps_per_epoch = 20000;
  /// Trajectories generated per epoch for synthetic sources.
  std::size_t trajectories = 1024;
  Regime regime = Regime::periodic;
  /// Continuous regime: datasets older than this many epochs are dropped.
  int retention = 10;
  /// Extra evaluations every this many update steps; 0 evaluates at epoch ends only.
  std::int64_t eval_interval = 0;
  int eval_episodes = 32;
  /// Window of generated trajectories (diffusion and world-model rollouts).
  Index window = 16;
  diffusion::SamplerConfig sampler;
  /// World-model source: rollout length and exploration std around the actor.
  int rollout_k = 5;
  double worldmodel_policy_std = 0.2;
  /// Roots for agent and data-generation randomness.
  std::uint64_t seed = 0;
  std::uint64_t generation_seed = 0;

  void validate() const;
};

/// Everything a run may draw on. `real` (raw units) is always required: it
/// fixes the agent's state normalizer and seeds world-model start states.
struct LoopInputs {
  const Dataset* real = nullptr;
  const diffusion::Denoiser* denoiser = nullptr;
  /// Normalization the denoiser was trained under.
  const NormStats* diffusion_stats = nullptr;
  const worldmodel::EnsembleDynamics* ensemble = nullptr;
  const PointMass2D* eval_env = nullptr;
};

struct MetricsRow {
  std::int64_t wall_step = 0;
  int epoch = 0;
  std::string source;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  double eval_return = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double bc_loss = 0.0;
};

struct LoopStats {
  std::int64_t sampler_invocations = 0;
  std::int64_t guidance_steps = 0;
  std::int64_t worldmodel_invocations = 0;
  std::int64_t padding_sampled = 0;
  std::int64_t anomalies = 0;
  /// Largest (current epoch - generation epoch) seen in the active buffer.
  int max_buffer_age = 0;
};

struct LoopResult {
  Actor policy;
  std::vector<MetricsRow> metrics;
  LoopStats stats;
  /// Datasets generated per epoch (synthetic sources only).
  std::vector<Dataset> generated;
};

/// Alternates data generation from `source` (guided by the current actor
/// where applicable) with TD3+BC updates on minibatches drawn uniformly from
/// the active buffer. Missing inputs raise ConfigError before any training.
LoopResult train_loop(const TrainLoopConfig& cfg, Source source, const AgentConfig& agent_cfg,
                      const LoopInputs& inputs, bool keep_generated = false);

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows);

}  // namespace trajforge::agent
