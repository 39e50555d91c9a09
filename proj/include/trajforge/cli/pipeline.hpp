#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "trajforge/agent/td3bc.hpp"
#include "trajforge/agent/train_loop.hpp"
#include "trajforge/analysis/comparison.hpp"
#include "trajforge/cli/config.hpp"
#include "trajforge/diffusion/denoiser.hpp"
#include "trajforge/worldmodel/ensemble.hpp"

namespace trajforge::cli {

PointMass2D make_env(const RunConfig& cfg);
/// The same environment with noise_std = 0, for replay.
PointMass2D make_oracle(const RunConfig& cfg);

/// Behavior data in raw units.
Dataset collect(const RunConfig& cfg, const std::string& behavior);
Dataset collect(const RunConfig& cfg);

/// A denoiser together with the normalization it was trained under.
struct DiffusionModel {
  diffusion::EdmDenoiser denoiser;
  NormStats stats;
  Index window = 16;

  diffusion::ChannelLayout layout() const;
  void save(const std::filesystem::path& path);
  static DiffusionModel load(const std::filesystem::path& path);
};

DiffusionModel train_diffusion(const RunConfig& cfg, const Dataset& raw, diffusion::DenoiserTrainResult* result = nullptr);

worldmodel::EnsembleDynamics train_worldmodel(const RunConfig& cfg, const Dataset& raw);

/// Offline TD3+BC on `raw` for `steps` updates.
agent::Actor train_offline_actor(const RunConfig& cfg, const Dataset& raw, std::int64_t steps, std::uint64_t seed);

struct NamedActor {
  std::string name;
  std::shared_ptr<const agent::Actor> actor;
};

/// random-trained, medium-trained (on `raw`) and expert-proxy (online TD3).
std::vector<NamedActor> train_targets(const RunConfig& cfg, const Dataset& raw);

/// A deterministic actor read as a Gaussian with the dataset's action std,
/// i.e. unit variance in normalized action units.
std::shared_ptr<const Policy> target_density(std::shared_ptr<const DeterministicPolicy> actor, const NormStats& stats);

/// Guided (policy non-null, lambda != 0) or unguided samples in raw units.
Dataset sample(const RunConfig& cfg, const DiffusionModel& model, std::shared_ptr<const Policy> raw_policy,
               double lambda, std::size_t count, std::uint64_t seed);

worldmodel::RolloutResult rollouts(const RunConfig& cfg, const worldmodel::EnsembleDynamics& model,
                                   const Policy& policy, const Dataset& raw, int k, std::size_t count,
                                   std::uint64_t seed);

/// Everything the comparison needs for one root seed.
/// Loop settings with sampler options and seeds filled in from `cfg`.
agent::TrainLoopConfig loop_config(const RunConfig& cfg, Index window);

struct SweepInputs {
  const Dataset* real = nullptr;
  const DiffusionModel* diffusion = nullptr;
  const worldmodel::EnsembleDynamics* ensemble = nullptr;
  std::vector<NamedActor> targets;
};

/// Five-source comparison rows for every lambda in cfg.analysis.lambdas.
/// Offline, unguided and world-model rows do not depend on lambda and are
/// emitted once, with lambda 0.
std::vector<analysis::ComparisonRow> sweep(const RunConfig& cfg, const SweepInputs& in,
                                           std::vector<std::string>* notices = nullptr);

}  // namespace trajforge::cli
