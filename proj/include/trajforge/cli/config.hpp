#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajforge/agent/td3bc.hpp"
#include "trajforge/agent/train_loop.hpp"
#include "trajforge/diffusion/sampler.hpp"
#include "trajforge/diffusion/train.hpp"
#include "trajforge/envs/point_mass.hpp"
#include "trajforge/policies/behavior.hpp"
#include "trajforge/worldmodel/ensemble.hpp"

namespace trajforge::cli {

struct EnvSection {
  std::string name = "point_mass";
  PointMassConfig point_mass;
};

struct DatasetSection {
  std::string behavior = "medium";
  BehaviorConfig policy;
  int episodes = 256;
  Index window = 16;
  Index stride = 4;
  double std_floor = kDefaultStdFloor;
};

struct DiffusionSection {
  nn::UNetConfig net;
  diffusion::DenoiserTrainConfig train;
  diffusion::NoiseSchedule schedule;
  /// Trajectories per `sample` call.
  std::size_t trajectories = 1024;
  int chunk = 256;
};

struct WorldModelSection {
  worldmodel::EnsembleConfig ensemble;
  int k = 5;
  worldmodel::StartMode start = worldmodel::StartMode::any_timestep;
  std::size_t count = 1024;
  /// Std of the Gaussian placed around a deterministic actor for rollouts.
  double policy_std = 0.2;
};

struct AgentSection {
  agent::AgentConfig td3;
  /// Online TD3 settings for the expert-proxy target policy.
  agent::OnlineConfig online;
  int eval_episodes = 32;
};

struct LoopSection {
  agent::TrainLoopConfig loop;
  agent::Source source = agent::Source::guided;
};

struct AnalysisSection {
  std::vector<double> lambdas{0.0, 0.5, 1.0, 2.0};
  std::size_t trajectories = 2048;
  /// Ensemble rollout length for the comparison (the episodic world model).
  int rollout_k = 16;
  /// Offline updates for each trained target policy.
  std::int64_t target_steps = 20000;
};

struct RunConfig {
  EnvSection env;
  DatasetSection dataset;
  DiffusionSection diffusion;
  diffusion::GuidanceConfig guidance;
  WorldModelSection worldmodel;
  AgentSection agent;
  LoopSection loop;
  AnalysisSection analysis;
  std::uint64_t seed = 0;
  int workers = 1;
  /// Empty: the default output root.
  std::string output_dir;

  RunConfig();
};

/// Default output root: $TRAJFORGE_OUTPUT, else "runs".
std::filesystem::path default_output_root();

nlohmann::json to_json(const RunConfig& cfg);

/// Overlays `j` on the defaults. Unknown keys, type errors and invalid values
/// are collected and thrown together as one ConfigError.
RunConfig config_from_json(const nlohmann::json& j);

RunConfig load_config(const std::filesystem::path& path);

/// Subsystem seeds split from the root seed.
std::uint64_t subsystem_seed(const RunConfig& cfg, const std::string& subsystem);

}  // namespace trajforge::cli
