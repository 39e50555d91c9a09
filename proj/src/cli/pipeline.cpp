#include "trajforge/cli/pipeline.hpp"

#include "trajforge/core/container.hpp"
#include "trajforge/core/error.hpp"
#include "trajforge/diffusion/train.hpp"
#include "trajforge/nn/checkpoint.hpp"
#include "trajforge/policies/behavior.hpp"

namespace trajforge::cli {

PointMass2D make_env(const RunConfig& cfg) {
  if (cfg.env.name != "point_mass") throw ConfigError("env.name: only point_mass is supported");
  return PointMass2D(cfg.env.point_mass);
}

PointMass2D make_oracle(const RunConfig& cfg) {
  PointMassConfig pc = cfg.env.point_mass;
  pc.noise_std = 0.0;
  return PointMass2D(pc);
}

Dataset collect(const RunConfig& cfg, const std::string& behavior) {
  const PointMass2D env = make_env(cfg);
  const BehaviorPolicy beh(parse_behavior_level(behavior), cfg.dataset.policy);
  return collect_dataset(env, beh, static_cast<std::size_t>(cfg.dataset.episodes), cfg.dataset.window,
                         cfg.dataset.stride, derive_seed(subsystem_seed(cfg, "env"), behavior));
}

Dataset collect(const RunConfig& cfg) { return collect(cfg, cfg.dataset.behavior); }

diffusion::ChannelLayout DiffusionModel::layout() const {
  return {stats.state_mean.size(), stats.action_mean.size()};
}

void DiffusionModel::save(const std::filesystem::path& path) {
  denoiser.save(path, {{"norm_stats", to_json(stats)}, {"window", window}});
}

DiffusionModel DiffusionModel::load(const std::filesystem::path& path) {
  const nlohmann::json meta = nn::read_checkpoint_meta(path);
  DiffusionModel m{diffusion::EdmDenoiser::load(path), {}, 16};
  try {
    const auto& extra = meta.at("extra");
    m.stats = norm_stats_from_json(extra.at("norm_stats"));
    m.window = extra.at("window").get<Index>();
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(LoadErrorKind::malformed_header, path.string() + ": missing diffusion normalization (" + e.what() + ")");
  }
  return m;
}

DiffusionModel train_diffusion(const RunConfig& cfg, const Dataset& raw, diffusion::DenoiserTrainResult* result) {
  const Dataset norm = normalize(raw, cfg.dataset.std_floor);
  nn::UNetConfig net = cfg.diffusion.net;
  net.channels = diffusion::ChannelLayout{raw.state_dim, raw.action_dim}.channels();
  diffusion::DenoiserTrainConfig tc = cfg.diffusion.train;
  tc.seed = subsystem_seed(cfg, "diffusion");
  return {diffusion::train_denoiser(norm, net, tc, result), *norm.norm_stats, raw.window};
}

worldmodel::EnsembleDynamics train_worldmodel(const RunConfig& cfg, const Dataset& raw) {
  worldmodel::EnsembleConfig ec = cfg.worldmodel.ensemble;
  ec.seed = subsystem_seed(cfg, "worldmodel");
  ec.workers = cfg.workers;
  return worldmodel::train_ensemble(raw, ec);
}

agent::Actor train_offline_actor(const RunConfig& cfg, const Dataset& raw, std::int64_t steps, std::uint64_t seed) {
  agent::AgentConfig ac = cfg.agent.td3;
  ac.seed = seed;
  agent::Td3Bc learner(raw.state_dim, raw.action_dim, ac);
  const NormStats st = raw.norm_stats && !raw.normalized ? *raw.norm_stats : compute_norm_stats(raw);
  learner.set_state_normalizer(st.state_mean, st.state_std);
  const Transitions data = extract_transitions(raw);
  if (data.empty()) throw InvalidArgument("train_offline_actor: dataset holds no transitions");
  for (std::int64_t i = 0; i < steps; ++i) learner.update(agent::sample_batch(data, ac.batch, learner.rng()));
  return learner.actor();
}

std::vector<NamedActor> train_targets(const RunConfig& cfg, const Dataset& raw) {
  const std::uint64_t root = subsystem_seed(cfg, "targets");
  std::vector<NamedActor> out;
  const Dataset random_data = collect(cfg, "random");
  out.push_back({"random-trained", std::make_shared<agent::Actor>(train_offline_actor(
                                       cfg, random_data, cfg.analysis.target_steps, derive_seed(root, "random")))});
  out.push_back({"medium-trained", std::make_shared<agent::Actor>(train_offline_actor(
                                       cfg, raw, cfg.analysis.target_steps, derive_seed(root, "medium")))});
  agent::OnlineConfig online = cfg.agent.online;
  online.seed = derive_seed(root, "expert");
  out.push_back({"expert-proxy",
                 std::make_shared<agent::Actor>(agent::train_online_td3(make_env(cfg), cfg.agent.td3, online))});
  return out;
}

std::shared_ptr<const Policy> target_density(std::shared_ptr<const DeterministicPolicy> actor, const NormStats& stats) {
  return std::make_shared<DeterministicAsGaussian>(std::move(actor), stats.action_std);
}

Dataset sample(const RunConfig& cfg, const DiffusionModel& model, std::shared_ptr<const Policy> raw_policy,
               double lambda, std::size_t count, std::uint64_t seed) {
  diffusion::SamplerConfig sc;
  sc.schedule = cfg.diffusion.schedule;
  sc.guidance = cfg.guidance;
  sc.guidance.lambda = lambda;
  sc.workers = cfg.workers;
  sc.chunk = cfg.diffusion.chunk;
  sc.seed = seed;
  std::unique_ptr<NormalizedPolicyView> view;
  if (raw_policy) view = std::make_unique<NormalizedPolicyView>(std::move(raw_policy), model.stats);
  return diffusion::sample_guided(model.denoiser, view.get(), model.layout(), model.stats, model.window, count, sc);
}

worldmodel::RolloutResult rollouts(const RunConfig& cfg, const worldmodel::EnsembleDynamics& model,
                                   const Policy& policy, const Dataset& raw, int k, std::size_t count,
                                   std::uint64_t seed) {
  worldmodel::TruncatedRolloutConfig rc;
  rc.k = k;
  rc.start = cfg.worldmodel.start;
  rc.count = count;
  rc.window = std::max<Index>(raw.window, k);
  rc.action_bound = cfg.agent.td3.action_bound;
  rc.seed = seed;
  rc.workers = cfg.workers;
  return worldmodel::rollout_truncated(model, policy, raw, rc);
}

agent::TrainLoopConfig loop_config(const RunConfig& cfg, Index window) {
  agent::TrainLoopConfig lc = cfg.loop.loop;
  lc.window = window;
  lc.sampler.schedule = cfg.diffusion.schedule;
  lc.sampler.guidance = cfg.guidance;
  lc.sampler.workers = cfg.workers;
  lc.sampler.chunk = cfg.diffusion.chunk;
  lc.seed = subsystem_seed(cfg, "agent");
  lc.generation_seed = subsystem_seed(cfg, "generation");
  return lc;
}

std::vector<analysis::ComparisonRow> sweep(const RunConfig& cfg, const SweepInputs& in,
                                           std::vector<std::string>* notices) {
  if (!in.real || !in.diffusion || !in.ensemble) throw ConfigError("sweep: dataset, diffusion model and ensemble are required");
  const std::uint64_t root = subsystem_seed(cfg, "analysis");
  const std::size_t n = cfg.analysis.trajectories;
  const PointMass2D oracle = make_oracle(cfg);

  // Every lambda reuses the sampler streams of the unguided run.
  const std::uint64_t sample_seed = derive_seed(root, "sample");
  std::vector<Dataset> owned;
  owned.reserve(2 + in.targets.size() * (2 + cfg.analysis.lambdas.size()));
  std::vector<analysis::SourceData> sources;
  sources.push_back({"offline", "", 0.0, in.real});
  owned.push_back(sample(cfg, *in.diffusion, nullptr, 0.0, n, sample_seed));
  sources.push_back({"unguided", "", 0.0, &owned.back()});

  std::vector<analysis::TargetPolicy> policies;
  RunConfig episodic = cfg;
  episodic.worldmodel.start = worldmodel::StartMode::initial_states;
  for (const auto& t : in.targets) {
    const auto density = target_density(t.actor, in.diffusion->stats);
    policies.push_back({t.name, density});
    owned.push_back(rollouts(episodic, *in.ensemble, *density, *in.real, cfg.analysis.rollout_k, n,
                             derive_seed(root, "episodic", policies.size()))
                        .data);
    sources.push_back({"episodic_wm", t.name, 0.0, &owned.back()});
    owned.push_back(
        rollouts(cfg, *in.ensemble, *density, *in.real, cfg.worldmodel.k, n, derive_seed(root, "truncated", policies.size()))
            .data);
    sources.push_back({"truncated_wm", t.name, 0.0, &owned.back()});
    for (double lambda : cfg.analysis.lambdas) {
      owned.push_back(sample(cfg, *in.diffusion, density, lambda, n, sample_seed));
      sources.push_back({"guided", t.name, lambda, &owned.back()});
    }
  }

  analysis::ComparisonInputs ci;
  ci.sources = std::move(sources);
  ci.policies = std::move(policies);
  ci.behavior = in.real;
  ci.oracle = &oracle;
  ci.window = in.real->window;
  ci.seed = cfg.seed;
  return analysis::compare_sources(ci, notices);
}

}  // namespace trajforge::cli
