#include "trajforge/worldmodel/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "trajforge/core/container.hpp"
#include "trajforge/core/error.hpp"
#include "trajforge/core/parallel.hpp"
#include "trajforge/core/transitions.hpp"
#include "trajforge/nn/adam.hpp"
#include "trajforge/nn/checkpoint.hpp"

namespace trajforge::worldmodel {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Two-sided soft clamp into [lo, hi]; returns d(out)/d(raw) in `slope`.
double soft_clamp(double raw, double lo, double hi, double* slope) {
  const double upper = hi - softplus(hi - raw);
  if (slope) *slope = sigmoid(hi - raw) * sigmoid(upper - lo);
  return lo + softplus(upper - lo);
}

void stats_of(const MatrixXd& x, VectorXd& mean, VectorXd& std) {
  mean = x.rowwise().mean();
  std = ((x.colwise() - mean).array().square().rowwise().mean()).sqrt();
  // A constant column carries no scale information; leave it unscaled.
  for (Index i = 0; i < std.size(); ++i)
    if (std[i] < 1e-6) std[i] = 1.0;
}

nlohmann::json vec_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

VectorXd json_vec(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

EnsembleDynamics::EnsembleDynamics(Index state_dim, Index action_dim, EnsembleConfig cfg)
    : state_dim_(state_dim), action_dim_(action_dim), cfg_(std::move(cfg)) {
  if (state_dim <= 0 || action_dim <= 0) throw InvalidArgument("EnsembleDynamics: dimensions must be positive");
  if (cfg_.members < 1 || cfg_.elites < 1 || cfg_.elites > cfg_.members)
    throw InvalidArgument("EnsembleDynamics: need 1 <= elites <= members");
  if (!(cfg_.min_logvar < cfg_.max_logvar)) throw InvalidArgument("EnsembleDynamics: min_logvar must be below max_logvar");
  std::vector<Index> widths{state_dim + action_dim};
  widths.insert(widths.end(), cfg_.hidden.begin(), cfg_.hidden.end());
  widths.push_back(2 * state_dim + 1);
  for (int m = 0; m < cfg_.members; ++m) {
    Rng rng(derive_seed(cfg_.seed, "ensemble-init", static_cast<std::uint64_t>(m)));
    nets_.emplace_back(widths, rng);
  }
  elites_.resize(static_cast<std::size_t>(cfg_.elites));
  std::iota(elites_.begin(), elites_.end(), 0);
  in_mean_ = VectorXd::Zero(state_dim + action_dim);
  in_std_ = VectorXd::Ones(state_dim + action_dim);
  out_mean_ = VectorXd::Zero(state_dim + 1);
  out_std_ = VectorXd::Ones(state_dim + 1);
}

MatrixXd EnsembleDynamics::inputs(const MatrixXd& states, const MatrixXd& actions) const {
  if (states.rows() != state_dim_ || actions.rows() != action_dim_ || states.cols() != actions.cols())
    throw InvalidArgument("EnsembleDynamics: state/action shapes do not match the model");
  MatrixXd x(state_dim_ + action_dim_, states.cols());
  x << states, actions;
  return (x.colwise() - in_mean_).array().colwise() / in_std_.array();
}

Prediction EnsembleDynamics::predict(int member, const MatrixXd& states, const MatrixXd& actions) const {
  if (member < 0 || member >= members()) throw InvalidArgument("EnsembleDynamics: member index out of range");
  const MatrixXd y = nets_[static_cast<std::size_t>(member)].infer(inputs(states, actions));
  const Index ds = state_dim_, n = y.cols();
  Prediction p;
  p.logvar.resize(ds, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < ds; ++i) p.logvar(i, j) = soft_clamp(y(ds + i, j), cfg_.min_logvar, cfg_.max_logvar, nullptr);
  const VectorXd dstd = out_std_.head(ds);
  p.delta_mean = (y.topRows(ds).array().colwise() * dstd.array()).colwise() + out_mean_.head(ds).array();
  p.delta_var = p.logvar.array().exp().colwise() * dstd.array().square();
  p.reward = y.row(2 * ds).array() * out_std_[ds] + out_mean_[ds];
  return p;
}

VectorXd EnsembleDynamics::disagreement(const MatrixXd& states, const MatrixXd& actions) const {
  const Index n = states.cols();
  MatrixXd sum = MatrixXd::Zero(state_dim_, n), sq = MatrixXd::Zero(state_dim_, n);
  for (int m = 0; m < members(); ++m) {
    const MatrixXd mu = predict(m, states, actions).delta_mean;
    sum += mu;
    sq += mu.cwiseProduct(mu);
  }
  const double k = members();
  const MatrixXd var = (sq / k - (sum / k).cwiseProduct(sum / k)).cwiseMax(0.0);
  return var.colwise().mean().transpose();
}

nn::ParamList EnsembleDynamics::params() {
  nn::ParamList out;
  for (auto& n : nets_) {
    const auto p = n.params();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

void EnsembleDynamics::save(const std::filesystem::path& path) {
  nlohmann::json meta{{"arch", "ensemble"},
                      {"state_dim", state_dim_},
                      {"action_dim", action_dim_},
                      {"members", cfg_.members},
                      {"elites", elites_},
                      {"hidden", cfg_.hidden},
                      {"min_logvar", cfg_.min_logvar},
                      {"max_logvar", cfg_.max_logvar},
                      {"in_mean", vec_json(in_mean_)},
                      {"in_std", vec_json(in_std_)},
                      {"out_mean", vec_json(out_mean_)},
                      {"out_std", vec_json(out_std_)}};
  nn::save_params(path, params(), meta);
}

EnsembleDynamics EnsembleDynamics::load(const std::filesystem::path& path) {
  const auto meta = nn::read_checkpoint_meta(path);
  try {
    if (meta.at("arch") != "ensemble") throw LoadError(LoadErrorKind::dimension_mismatch, "not an ensemble checkpoint");
    EnsembleConfig cfg;
    cfg.members = meta.at("members").get<int>();
    const auto elites = meta.at("elites").get<std::vector<int>>();
    cfg.elites = static_cast<int>(elites.size());
    cfg.hidden = meta.at("hidden").get<std::vector<Index>>();
    cfg.min_logvar = meta.at("min_logvar").get<double>();
    cfg.max_logvar = meta.at("max_logvar").get<double>();
    EnsembleDynamics m(meta.at("state_dim").get<Index>(), meta.at("action_dim").get<Index>(), cfg);
    m.elites_ = elites;
    m.in_mean_ = json_vec(meta.at("in_mean"));
    m.in_std_ = json_vec(meta.at("in_std"));
    m.out_mean_ = json_vec(meta.at("out_mean"));
    m.out_std_ = json_vec(meta.at("out_std"));
    nn::load_params(path, m.params());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(LoadErrorKind::malformed_header, std::string("ensemble checkpoint: ") + e.what());
  }
}

EnsembleDynamics train_ensemble(const Dataset& dataset, const EnsembleConfig& cfg, std::vector<double>* final_logvar) {
  if (dataset.empty()) throw InvalidArgument("train_ensemble: dataset is empty");
  const Transitions tr = extract_transitions(dataset.normalized ? denormalize(dataset) : dataset);
  if (tr.empty()) throw InvalidArgument("train_ensemble: dataset has no non-padding transitions");
  if (cfg.batch < 1 || cfg.steps < 0) throw InvalidArgument("train_ensemble: batch must be positive");

  EnsembleDynamics model(dataset.state_dim, dataset.action_dim, cfg);
  const Index ds = model.state_dim_, n = static_cast<Index>(tr.size());
  MatrixXd raw_in(ds + model.action_dim_, n);
  raw_in << tr.states, tr.actions;
  MatrixXd raw_out(ds + 1, n);
  raw_out << tr.next_states - tr.states, tr.rewards.transpose();
  stats_of(raw_in, model.in_mean_, model.in_std_);
  stats_of(raw_out, model.out_mean_, model.out_std_);
  const MatrixXd X = (raw_in.colwise() - model.in_mean_).array().colwise() / model.in_std_.array();
  const MatrixXd Y = (raw_out.colwise() - model.out_mean_).array().colwise() / model.out_std_.array();

  // Shared holdout split for elite selection.
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(derive_seed(cfg.seed, "ensemble-split"));
  std::shuffle(order.begin(), order.end(), split_rng.engine());
  const auto n_hold = static_cast<Index>(n >= 20 ? std::floor(cfg.holdout_fraction * static_cast<double>(n)) : 0);
  const std::vector<Index> hold(order.begin(), order.begin() + n_hold), train(order.begin() + n_hold, order.end());

  std::vector<double> score(static_cast<std::size_t>(cfg.members)), mean_lv(static_cast<std::size_t>(cfg.members));
  parallel_for(static_cast<std::size_t>(cfg.members), cfg.workers, [&](std::size_t m) {
    nn::Mlp& net = model.nets_[m];
    Rng rng(derive_seed(cfg.seed, "ensemble-train", m));
    std::vector<Index> boot(train.size());
    for (auto& b : boot) b = train[rng.index(train.size())];
    nn::AdamConfig ac;
    ac.lr = cfg.lr;
    nn::Adam opt(ac);
    const nn::ParamList ps = net.params();
    const Index bsz = std::min<Index>(cfg.batch, static_cast<Index>(boot.size()));
    std::size_t cursor = boot.size();
    MatrixXd xb(X.rows(), bsz), yb(Y.rows(), bsz);
    for (std::int64_t step = 0; step < cfg.steps; ++step) {
      for (Index j = 0; j < bsz; ++j) {
        if (cursor == boot.size()) {
          std::shuffle(boot.begin(), boot.end(), rng.engine());
          cursor = 0;
        }
        const Index c = boot[cursor++];
        xb.col(j) = X.col(c);
        yb.col(j) = Y.col(c);
      }
      const MatrixXd out = net.forward(xb);
      MatrixXd grad(out.rows(), bsz);
      const double inv = 1.0 / static_cast<double>(bsz);
      for (Index j = 0; j < bsz; ++j) {
        for (Index i = 0; i < ds; ++i) {
          double slope = 0.0;
          const double lv = soft_clamp(out(ds + i, j), cfg.min_logvar, cfg.max_logvar, &slope);
          const double err = out(i, j) - yb(i, j);
          const double prec = std::exp(-lv);
          grad(i, j) = err * prec * inv;
          grad(ds + i, j) = 0.5 * (1.0 - err * err * prec) * slope * inv;
        }
        grad(2 * ds, j) = (out(2 * ds, j) - yb(ds, j)) * inv;
      }
      net.backward(grad);
      opt.step(ps);
    }
    const auto& eval_idx = hold.empty() ? train : hold;
    MatrixXd xe(X.rows(), static_cast<Index>(eval_idx.size())), ye(Y.rows(), xe.cols());
    for (Index j = 0; j < xe.cols(); ++j) {
      xe.col(j) = X.col(eval_idx[static_cast<std::size_t>(j)]);
      ye.col(j) = Y.col(eval_idx[static_cast<std::size_t>(j)]);
    }
    const MatrixXd pe = net.infer(xe);
    MatrixXd mu(ds + 1, xe.cols());
    mu << pe.topRows(ds), pe.row(2 * ds);
    score[m] = (mu - ye).squaredNorm() / static_cast<double>(ye.size());

    const MatrixXd pt = net.infer(X);
    double lv_sum = 0.0;
    for (Index j = 0; j < pt.cols(); ++j)
      for (Index i = 0; i < ds; ++i) lv_sum += soft_clamp(pt(ds + i, j), cfg.min_logvar, cfg.max_logvar, nullptr);
    mean_lv[m] = lv_sum / static_cast<double>(pt.cols() * ds);
  });

  std::vector<int> rank(static_cast<std::size_t>(cfg.members));
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(), [&](int a, int b) { return score[static_cast<std::size_t>(a)] < score[static_cast<std::size_t>(b)]; });
  model.elites_.assign(rank.begin(), rank.begin() + cfg.elites);
  std::sort(model.elites_.begin(), model.elites_.end());
  if (final_logvar) *final_logvar = mean_lv;
  return model;
}

StartMode parse_start_mode(const std::string& name) {
  if (name == "initial-states") return StartMode::initial_states;
  if (name == "any-timestep") return StartMode::any_timestep;
  throw InvalidArgument("unknown start mode '" + name + "' (expected initial-states or any-timestep)");
}

std::string to_string(StartMode mode) { return mode == StartMode::initial_states ? "initial-states" : "any-timestep"; }

namespace {

struct StartPool {
  std::vector<std::pair<std::size_t, Index>> refs;  // (trajectory, column)
};

StartPool start_pool(const Dataset& d, StartMode mode) {
  StartPool pool;
  for (std::size_t k = 0; k < d.size(); ++k) {
    const auto& t = d.trajectories[k];
    if (mode == StartMode::initial_states) {
      if (t.t0 == 0) pool.refs.emplace_back(k, 0);
    } else {
      for (Index c = 0; c < t.valid_length(); ++c) pool.refs.emplace_back(k, c);
    }
  }
  if (pool.refs.empty())
    throw InvalidArgument("sample_start_states: dataset has no " +
                          std::string(mode == StartMode::initial_states ? "episode-start" : "non-padding") + " states");
  return pool;
}

}  // namespace

MatrixXd sample_start_states(const Dataset& d, StartMode mode, std::size_t count, Rng& rng,
                             std::vector<std::int64_t>* t0) {
  const StartPool pool = start_pool(d, mode);
  MatrixXd out(d.state_dim, static_cast<Index>(count));
  if (t0) t0->resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto [k, c] = pool.refs[rng.index(pool.refs.size())];
    out.col(static_cast<Index>(i)) = d.trajectories[k].states.col(c);
    if (t0) (*t0)[i] = d.trajectories[k].t0 + c;
  }
  return out;
}

RolloutResult rollout_truncated(const EnsembleDynamics& model, const Policy& policy, const Dataset& dataset,
                                const TruncatedRolloutConfig& cfg) {
  if (cfg.k < 1) throw InvalidArgument("rollout_truncated: k must be at least 1");
  const Index w = cfg.window == 0 ? cfg.k : cfg.window;
  if (w < cfg.k) throw InvalidArgument("rollout_truncated: window shorter than k");
  if (dataset.state_dim != model.state_dim() || dataset.action_dim != model.action_dim() ||
      policy.state_dim() != model.state_dim() || policy.action_dim() != model.action_dim())
    throw InvalidArgument("rollout_truncated: dataset, policy and model dimensions differ");

  const Dataset raw = dataset.normalized ? denormalize(dataset) : dataset;
  Rng start_rng(derive_seed(cfg.seed, "wm-starts"));
  std::vector<std::int64_t> t0;
  const MatrixXd starts = sample_start_states(raw, cfg.start, cfg.count, start_rng, &t0);

  const Index ds = model.state_dim(), da = model.action_dim();
  std::vector<Trajectory> trajs(cfg.count);
  std::vector<std::uint8_t> cut(cfg.count, 0);
  const auto& elites = model.elites();
  parallel_for(cfg.count, cfg.workers, [&](std::size_t i) {
    Rng rng(derive_seed(cfg.seed, "wm-rollout", i));
    Trajectory t = Trajectory::zeros(ds, da, w);
    t.t0 = t0[i];
    t.states.col(0) = starts.col(static_cast<Index>(i));
    Index len = 0;
    for (Index j = 0; j < cfg.k; ++j) {
      const Eigen::VectorXd s = t.states.col(j);
      Eigen::VectorXd a = cfg.deterministic_policy ? policy.mean(s) : sample(policy, s, rng);
      if (cfg.action_bound > 0) a = a.cwiseMax(-cfg.action_bound).cwiseMin(cfg.action_bound);
      const int m = elites[rng.index(elites.size())];
      const Prediction p = model.predict(m, s, a);
      Eigen::VectorXd next(ds);
      for (Index d = 0; d < ds; ++d) next[d] = s[d] + p.delta_mean(d, 0) + std::sqrt(p.delta_var(d, 0)) * rng.normal();
      const double r = p.reward[0];
      if (!next.allFinite() || !std::isfinite(r) || !a.allFinite()) {
        cut[i] = 1;
        break;
      }
      t.actions.col(j) = a;
      t.rewards[j] = r;
      t.states.col(j + 1) = next;
      ++len;
    }
    for (Index j = len; j < w; ++j) {
      t.padding[static_cast<std::size_t>(j)] = 1;
      t.dones[static_cast<std::size_t>(j)] = 1;
      t.states.col(j + 1) = t.states.col(len);
    }
    trajs[i] = std::move(t);
  });

  RolloutResult res;
  res.data.window = w;
  res.data.state_dim = ds;
  res.data.action_dim = da;
  res.data.source_tag = "worldmodel";
  res.data.norm_stats = dataset.norm_stats;
  for (std::size_t i = 0; i < cfg.count; ++i) {
    if (cut[i]) res.truncated.push_back(i);
    res.data.add(std::move(trajs[i]));
  }
  return res;
}

}  // namespace trajforge::worldmodel
