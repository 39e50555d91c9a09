#include "trajforge/agent/td3bc.hpp"

#include <cmath>

#include "trajforge/core/container.hpp"
#include "trajforge/core/error.hpp"
#include "trajforge/nn/checkpoint.hpp"

namespace trajforge::agent {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::vector<Index> widths(Index in, const std::vector<Index>& hidden, Index out) {
  std::vector<Index> w{in};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(out);
  return w;
}

nlohmann::json vec_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

VectorXd json_vec(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
}

bool finite(const nn::ParamList& ps) {
  for (const nn::Param* p : ps)
    if (!p->grad.allFinite()) return false;
  return true;
}

}  // namespace

void AgentConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("agent: gamma must lie in (0, 1]");
  if (policy_delay < 1) throw ConfigError("agent: policy_delay must be at least 1");
  if (batch < 1) throw ConfigError("agent: batch must be positive");
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("agent: tau must lie in (0, 1]");
  if (alpha < 0.0) throw ConfigError("agent: alpha must be non-negative");
}

Actor::Actor(Index state_dim, Index action_dim, const std::vector<Index>& hidden, double bound, Rng& rng)
    : net_(widths(state_dim, hidden, action_dim), rng, nn::OutputActivation::tanh),
      mean_(VectorXd::Zero(state_dim)),
      std_(VectorXd::Ones(state_dim)),
      bound_(bound) {}

void Actor::set_state_normalizer(VectorXd mean, VectorXd std) {
  if (mean.size() != state_dim() || std.size() != state_dim() || (std.array() <= 0).any())
    throw InvalidArgument("Actor: state normalizer must match state_dim with positive std");
  mean_ = std::move(mean);
  std_ = std::move(std);
}

MatrixXd Actor::normalize_states(const MatrixXd& states) const {
  if (states.rows() != state_dim()) throw InvalidArgument("Actor: state dimension mismatch");
  return (states.colwise() - mean_).array().colwise() / std_.array();
}

VectorXd Actor::act(const VectorXd& state) const { return act_batch(state).col(0); }

MatrixXd Actor::act_batch(const MatrixXd& states) const { return bound_ * net_.infer(normalize_states(states)); }

void Actor::save(const std::filesystem::path& path) {
  nlohmann::json meta{{"arch", "td3_actor"},
                      {"widths", net_.widths()},
                      {"action_bound", bound_},
                      {"state_mean", vec_json(mean_)},
                      {"state_std", vec_json(std_)}};
  nn::save_params(path, net_.params(), meta);
}

Actor Actor::load(const std::filesystem::path& path) {
  const auto meta = nn::read_checkpoint_meta(path);
  try {
    if (meta.at("arch") != "td3_actor") throw LoadError(LoadErrorKind::dimension_mismatch, "not an actor checkpoint");
    const auto w = meta.at("widths").get<std::vector<Index>>();
    Rng rng(0);
    Actor a(w.front(), w.back(), std::vector<Index>(w.begin() + 1, w.end() - 1), meta.at("action_bound").get<double>(),
            rng);
    a.set_state_normalizer(json_vec(meta.at("state_mean")), json_vec(meta.at("state_std")));
    nn::load_params(path, a.net_.params());
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(LoadErrorKind::malformed_header, std::string("actor checkpoint: ") + e.what());
  }
}

Td3Bc::Td3Bc(Index state_dim, Index action_dim, AgentConfig cfg) : cfg_(std::move(cfg)), rng_(0) {
  cfg_.validate();
  Rng init(derive_seed(cfg_.seed, "agent-init"));
  actor_ = Actor(state_dim, action_dim, cfg_.hidden, cfg_.action_bound, init);
  q1_ = nn::Mlp(widths(state_dim + action_dim, cfg_.hidden, 1), init);
  q2_ = nn::Mlp(widths(state_dim + action_dim, cfg_.hidden, 1), init);
  actor_target_ = actor_;
  q1_target_ = q1_;
  q2_target_ = q2_;
  nn::AdamConfig ac;
  ac.lr = cfg_.actor_lr;
  actor_opt_ = nn::Adam(ac);
  ac.lr = cfg_.critic_lr;
  critic_opt_ = nn::Adam(ac);
  rng_ = Rng(derive_seed(cfg_.seed, "agent-updates"));
}

void Td3Bc::set_state_normalizer(const VectorXd& mean, const VectorXd& std) {
  actor_.set_state_normalizer(mean, std);
  actor_target_.set_state_normalizer(mean, std);
}

MatrixXd Td3Bc::critic_input(const MatrixXd& norm_states, const MatrixXd& actions) const {
  MatrixXd x(norm_states.rows() + actions.rows(), norm_states.cols());
  x << norm_states, actions;
  return x;
}

Eigen::RowVectorXd Td3Bc::q1(const MatrixXd& states, const MatrixXd& actions) const {
  return q1_.infer(critic_input(actor_.normalize_states(states), actions)).row(0);
}

nn::ParamList Td3Bc::params() {
  nn::ParamList out = actor_.network().params();
  for (nn::Mlp* m : {&q1_, &q2_}) {
    const auto p = m->params();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

UpdateInfo Td3Bc::update(const Transitions& batch) {
  UpdateInfo info;
  const Index n = batch.states.cols(), da = actor_.action_dim();
  if (n == 0) throw InvalidArgument("Td3Bc::update: empty batch");
  if (batch.states.rows() != actor_.state_dim() || batch.actions.rows() != da)
    throw InvalidArgument("Td3Bc::update: batch dimensions do not match the agent");
  const double inv = 1.0 / static_cast<double>(n);
  const double bound = cfg_.action_bound;

  const MatrixXd s = actor_.normalize_states(batch.states);
  const MatrixXd s2 = actor_.normalize_states(batch.next_states);

  // Critic targets with target-policy smoothing and clipped double Q.
  MatrixXd noise(da, n);
  for (Index i = 0; i < noise.size(); ++i)
    noise.data()[i] = std::clamp(cfg_.policy_noise * rng_.normal(), -cfg_.noise_clip, cfg_.noise_clip);
  const MatrixXd a2 = (bound * actor_target_.network().infer(s2) + bound * noise).cwiseMax(-bound).cwiseMin(bound);
  const MatrixXd x2 = critic_input(s2, a2);
  const Eigen::RowVectorXd tq = q1_target_.infer(x2).row(0).cwiseMin(q2_target_.infer(x2).row(0));
  Eigen::RowVectorXd y(n);
  for (Index j = 0; j < n; ++j) {
    const double cont = cfg_.terminal_dones && batch.dones[static_cast<std::size_t>(j)] ? 0.0 : 1.0;
    y[j] = batch.rewards[j] + cfg_.gamma * cont * tq[j];
  }

  const MatrixXd x = critic_input(s, batch.actions);
  const Eigen::RowVectorXd e1 = q1_.forward(x).row(0) - y;
  const Eigen::RowVectorXd e2 = q2_.forward(x).row(0) - y;
  info.critic_loss = (e1.squaredNorm() + e2.squaredNorm()) * inv;
  if (!std::isfinite(info.critic_loss)) {
    info.skipped = true;
    ++anomalies_;
    return info;
  }
  nn::ParamList critic_ps = q1_.params();
  const auto p2 = q2_.params();
  critic_ps.insert(critic_ps.end(), p2.begin(), p2.end());
  q1_.backward(2.0 * inv * e1);
  q2_.backward(2.0 * inv * e2);
  if (!critic_opt_.step(critic_ps)) {
    info.skipped = true;
    ++anomalies_;
    return info;
  }
  ++steps_;

  if (steps_ % cfg_.policy_delay == 0) {
    const MatrixXd pi = bound * actor_.network().forward(s);
    const Eigen::RowVectorXd q = q1_.forward(critic_input(s, pi)).row(0);
    const double mean_abs_q = q.cwiseAbs().mean();
    const MatrixXd diff = pi - batch.actions;
    info.bc_loss = diff.squaredNorm() / static_cast<double>(diff.size());
    double lambda = 1.0;
    MatrixXd grad_pi = MatrixXd::Zero(da, n);
    if (cfg_.behavior_cloning) {
      lambda = cfg_.alpha / std::max(mean_abs_q, 1e-8);
      info.actor_loss = -lambda * q.mean() + info.bc_loss;
      grad_pi = 2.0 * diff / static_cast<double>(diff.size());
    } else {
      info.actor_loss = -q.mean();
    }
    if (!std::isfinite(info.actor_loss)) {
      info.skipped = true;
      ++anomalies_;
      return info;
    }
    const MatrixXd dx = q1_.backward(Eigen::RowVectorXd::Constant(n, -lambda * inv));
    nn::zero_grads(q1_.params());
    grad_pi += dx.bottomRows(da);
    actor_.network().backward(bound * grad_pi);
    const nn::ParamList aps = actor_.network().params();
    if (!finite(aps) || !actor_opt_.step(aps)) {
      nn::zero_grads(aps);
      info.skipped = true;
      ++anomalies_;
      return info;
    }
    info.actor_updated = true;
    actor_target_.network().soft_update_from(actor_.network(), cfg_.tau);
    q1_target_.soft_update_from(q1_, cfg_.tau);
    q2_target_.soft_update_from(q2_, cfg_.tau);
  }
  return info;
}

Transitions sample_batch(const Transitions& data, int batch, Rng& rng, std::size_t limit) {
  const std::size_t pool = limit == 0 ? data.size() : std::min(limit, data.size());
  if (pool == 0) throw InvalidArgument("sample_batch: no transitions to sample");
  Transitions out;
  const Index n = batch;
  out.states.resize(data.states.rows(), n);
  out.actions.resize(data.actions.rows(), n);
  out.next_states.resize(data.states.rows(), n);
  out.rewards.resize(n);
  out.dones.resize(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    const auto i = static_cast<Index>(rng.index(pool));
    out.states.col(j) = data.states.col(i);
    out.actions.col(j) = data.actions.col(i);
    out.next_states.col(j) = data.next_states.col(i);
    out.rewards[j] = data.rewards[i];
    out.dones[static_cast<std::size_t>(j)] = data.dones[static_cast<std::size_t>(i)];
  }
  return out;
}

Actor train_online_td3(const PointMass2D& env, AgentConfig cfg, const OnlineConfig& online) {
  cfg.behavior_cloning = false;
  cfg.seed = derive_seed(online.seed, "online-agent");
  Td3Bc agent(env.state_dim(), env.action_dim(), cfg);
  Rng rng(derive_seed(online.seed, "online-env"));
  const Index ds = env.state_dim(), da = env.action_dim(), total = online.steps;
  Transitions buf;
  buf.states.resize(ds, total);
  buf.actions.resize(da, total);
  buf.next_states.resize(ds, total);
  buf.rewards.resize(total);
  buf.dones.resize(static_cast<std::size_t>(total));

  VectorXd s = env.reset(rng);
  int t = 0;
  for (Index i = 0; i < total; ++i) {
    VectorXd a(da);
    if (i < online.random_steps) {
      for (Index d = 0; d < da; ++d) a[d] = rng.uniform(-cfg.action_bound, cfg.action_bound);
    } else {
      a = agent.actor().act(s);
      for (Index d = 0; d < da; ++d) a[d] += online.exploration_std * rng.normal();
      a = a.cwiseMax(-cfg.action_bound).cwiseMin(cfg.action_bound);
    }
    const StepResult r = env.step(s, a, rng);
    ++t;
    buf.states.col(i) = s;
    buf.actions.col(i) = a;
    buf.next_states.col(i) = r.next_state;
    buf.rewards[i] = r.reward;
    buf.dones[static_cast<std::size_t>(i)] = t >= env.config().horizon;
    s = r.next_state;
    if (t >= env.config().horizon) {
      s = env.reset(rng);
      t = 0;
    }
    if (i + 1 >= online.random_steps)
      agent.update(sample_batch(buf, cfg.batch, agent.rng(), static_cast<std::size_t>(i + 1)));
  }
  return agent.actor();
}

double evaluate(const PointMass2D& env, const DeterministicPolicy& policy, int episodes, std::uint64_t seed) {
  const DeterministicAsGaussian view(std::shared_ptr<const DeterministicPolicy>(&policy, [](const DeterministicPolicy*) {}));
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    Rng rng(derive_seed(seed, "evaluate", static_cast<std::uint64_t>(e)));
    const VectorXd s0 = env.reset(rng);
    total += rollout_deterministic(env, view, s0, env.config().horizon, rng).rewards.sum();
  }
  return total / episodes;
}

}  // namespace trajforge::agent
