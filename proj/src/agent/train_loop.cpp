#include "trajforge/agent/train_loop.hpp"

#include <fstream>
#include <iomanip>

#include "trajforge/core/error.hpp"

namespace trajforge::agent {

Source parse_source(const std::string& name) {
  if (name == "real") return Source::real;
  if (name == "unguided") return Source::unguided;
  if (name == "guided") return Source::guided;
  if (name == "worldmodel") return Source::worldmodel;
  throw InvalidArgument("unknown source '" + name + "' (expected real, unguided, guided or worldmodel)");
}

std::string to_string(Source s) {
  switch (s) {
    case Source::real: return "real";
    case Source::unguided: return "unguided";
    case Source::guided: return "guided";
    case Source::worldmodel: return "worldmodel";
  }
  return "?";
}

Regime parse_regime(const std::string& name) {
  if (name == "periodic") return Regime::periodic;
  if (name == "continuous") return Regime::continuous;
  throw InvalidArgument("unknown regime '" + name + "' (expected periodic or continuous)");
}

std::string to_string(Regime r) { return r == Regime::periodic ? "periodic" : "continuous"; }

void TrainLoopConfig::validate() const {
  if (epochs < 1 || steps_per_epoch < 1 || trajectories < 1 || retention < 1 || eval_episodes < 1 || window < 1 ||
      rollout_k < 1)
    throw ConfigError("train loop: epochs, steps, trajectories, retention, eval episodes, window and k must be >= 1");
  if (eval_interval < 0) throw ConfigError("train loop: eval_interval must be non-negative");
}

namespace {

void check_inputs(Source source, const LoopInputs& in, const AgentConfig& agent_cfg) {
  if (!in.real) throw ConfigError("train loop: the real dataset is required");
  if (!in.eval_env) throw ConfigError("train loop: an evaluation environment is required");
  if (in.real->empty()) throw ConfigError("train loop: the real dataset is empty");
  if (in.real->state_dim != in.eval_env->state_dim() || in.real->action_dim != in.eval_env->action_dim())
    throw ConfigError("train loop: dataset and environment dimensions differ");
  if ((source == Source::guided || source == Source::unguided) && (!in.denoiser || !in.diffusion_stats))
    throw ConfigError("train loop: source '" + to_string(source) + "' needs a diffusion checkpoint and its normalization");
  if (source == Source::worldmodel && !in.ensemble)
    throw ConfigError("train loop: source 'worldmodel' needs an ensemble checkpoint");
  agent_cfg.validate();
}

}  // namespace

LoopResult train_loop(const TrainLoopConfig& cfg, Source source, const AgentConfig& agent_cfg, const LoopInputs& in,
                      bool keep_generated) {
  cfg.validate();
  check_inputs(source, in, agent_cfg);

  const Dataset real = in.real->normalized ? denormalize(*in.real) : *in.real;
  const NormStats real_stats = compute_norm_stats(real);
  AgentConfig acfg = agent_cfg;
  acfg.seed = derive_seed(cfg.seed, "agent");
  Td3Bc agent(real.state_dim, real.action_dim, acfg);
  agent.set_state_normalizer(real_stats.state_mean, real_stats.state_std);

  const diffusion::ChannelLayout layout{real.state_dim, real.action_dim};
  const double lambda = source == Source::guided ? cfg.sampler.guidance.lambda : 0.0;

  LoopResult res;
  TransitionBuffer buffer;
  if (source == Source::real) buffer.add(real, 0);

  std::int64_t wall = 0;
  double c_sum = 0, a_sum = 0, b_sum = 0;
  std::int64_t c_n = 0, a_n = 0;
  auto log_row = [&](int epoch) {
    MetricsRow row;
    row.wall_step = wall;
    row.epoch = epoch;
    row.source = to_string(source);
    row.lambda = lambda;
    row.seed = cfg.seed;
    row.eval_return = evaluate(*in.eval_env, agent.actor(), cfg.eval_episodes, derive_seed(cfg.seed, "eval", epoch));
    row.critic_loss = c_n ? c_sum / static_cast<double>(c_n) : 0.0;
    row.actor_loss = a_n ? a_sum / static_cast<double>(a_n) : 0.0;
    row.bc_loss = a_n ? b_sum / static_cast<double>(a_n) : 0.0;
    res.metrics.push_back(row);
    c_sum = a_sum = b_sum = 0;
    c_n = a_n = 0;
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (source != Source::real) {
      Dataset gen;
      const auto gen_seed = derive_seed(cfg.generation_seed, "generate", static_cast<std::uint64_t>(epoch));
      if (source == Source::worldmodel) {
        worldmodel::TruncatedRolloutConfig rc;
        rc.k = cfg.rollout_k;
        rc.count = cfg.trajectories;
        rc.window = std::max<Index>(cfg.window, cfg.rollout_k);
        rc.seed = gen_seed;
        rc.workers = cfg.sampler.workers;
        const DeterministicAsGaussian pol(agent.snapshot(), cfg.worldmodel_policy_std);
        gen = worldmodel::rollout_truncated(*in.ensemble, pol, real, rc).data;
        ++res.stats.worldmodel_invocations;
      } else {
        diffusion::SamplerConfig sc = cfg.sampler;
        sc.seed = gen_seed;
        diffusion::SamplerStats ss;
        if (source == Source::guided) {
          const auto view = std::make_shared<NormalizedPolicyView>(
              std::make_shared<DeterministicAsGaussian>(agent.snapshot()), *in.diffusion_stats);
          gen = diffusion::sample_guided(*in.denoiser, view.get(), layout, *in.diffusion_stats, cfg.window,
                                         cfg.trajectories, sc, &ss);
        } else {
          gen = diffusion::sample_guided(*in.denoiser, nullptr, layout, *in.diffusion_stats, cfg.window,
                                         cfg.trajectories, sc, &ss);
        }
        ++res.stats.sampler_invocations;
        res.stats.guidance_steps += ss.guidance_steps;
      }
      if (cfg.regime == Regime::periodic) buffer.clear();
      buffer.add(gen, epoch);
      if (cfg.regime == Regime::continuous) buffer.retain_from(epoch - cfg.retention + 1);
      res.stats.max_buffer_age = std::max(res.stats.max_buffer_age, epoch - buffer.oldest_epoch());
      if (keep_generated) res.generated.push_back(std::move(gen));
    }
    if (buffer.empty()) throw diffusion::SamplingError("train loop: generated dataset holds no transitions");

    for (std::int64_t step = 0; step < cfg.steps_per_epoch; ++step) {
      const UpdateInfo info = agent.update(buffer.sample(acfg.batch, agent.rng()));
      ++wall;
      if (!info.skipped) {
        c_sum += info.critic_loss;
        ++c_n;
        if (info.actor_updated) {
          a_sum += info.actor_loss;
          b_sum += info.bc_loss;
          ++a_n;
        }
      }
      if (cfg.eval_interval > 0 && wall % cfg.eval_interval == 0 && step + 1 < cfg.steps_per_epoch) log_row(epoch);
    }
    log_row(epoch);
  }
  res.stats.padding_sampled = buffer.padding_sampled();
  res.stats.anomalies = agent.anomalies();
  res.policy = agent.actor();
  return res;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write metrics file " + path.string());
  out << "wall_step,epoch,source,lambda,seed,eval_return,critic_loss,actor_loss,bc_loss\n";
  out << std::setprecision(10);
  for (const auto& r : rows)
    out << r.wall_step << ',' << r.epoch << ',' << r.source << ',' << r.lambda << ',' << r.seed << ','
        << r.eval_return << ',' << r.critic_loss << ',' << r.actor_loss << ',' << r.bc_loss << '\n';
}

}  // namespace trajforge::agent
