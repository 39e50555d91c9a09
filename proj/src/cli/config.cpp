#include "trajforge/cli/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "trajforge/core/error.hpp"
#include "trajforge/core/random.hpp"

namespace trajforge::cli {

using nlohmann::json;

RunConfig::RunConfig() {
  diffusion.net.width = 64;
  diffusion.train.epochs = 250;
}

std::filesystem::path default_output_root() {
  const char* env = std::getenv("TRAJFORGE_OUTPUT");
  return env && *env ? std::filesystem::path(env) : std::filesystem::path("runs");
}

namespace {

// Enumerations travel as strings.
template <class E>
struct Choice {
  E& value;
  std::function<E(const std::string&)> parse;
  std::function<std::string(E)> name;
};

json encode(double v) { return v; }
json encode(bool v) { return v; }
json encode(const std::string& v) { return v; }
json encode(const Eigen::Vector2d& v) { return json::array({v[0], v[1]}); }
template <class T>
  requires std::is_integral_v<T>
json encode(T v) {
  return v;
}
template <class T>
json encode(const std::vector<T>& v) {
  return v;
}

void decode(const json& j, double& v) {
  if (!j.is_number()) throw std::invalid_argument("expected a number");
  v = j.get<double>();
}
void decode(const json& j, bool& v) {
  if (!j.is_boolean()) throw std::invalid_argument("expected true or false");
  v = j.get<bool>();
}
void decode(const json& j, std::string& v) {
  if (!j.is_string()) throw std::invalid_argument("expected a string");
  v = j.get<std::string>();
}
void decode(const json& j, Eigen::Vector2d& v) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw std::invalid_argument("expected [x, y]");
  v = Eigen::Vector2d(j[0].get<double>(), j[1].get<double>());
}
template <class T>
  requires std::is_integral_v<T>
void decode(const json& j, T& v) {
  if (!j.is_number_integer()) throw std::invalid_argument("expected an integer");
  if constexpr (std::is_unsigned_v<T>) {
    if (j.is_number_unsigned() || j.get<std::int64_t>() >= 0) {
      v = j.get<T>();
      return;
    }
    throw std::invalid_argument("expected a non-negative integer");
  } else {
    v = j.get<T>();
  }
}
template <class T>
void decode(const json& j, std::vector<T>& v) {
  if (!j.is_array()) throw std::invalid_argument("expected a list");
  std::vector<T> out(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) decode(j[i], out[i]);
  v = std::move(out);
}

class Writer {
 public:
  json root = json::object();

  template <class F>
  void section(const char* name, F&& body) {
    json* outer = cur_;
    cur_ = &(*outer)[name];
    *cur_ = json::object();
    body();
    cur_ = outer;
  }
  template <class T>
  void field(const char* name, T& v) {
    (*cur_)[name] = encode(v);
  }
  template <class E>
  void field(const char* name, Choice<E> c) {
    (*cur_)[name] = c.name(c.value);
  }

 private:
  json* cur_ = &root;
};

class Reader {
 public:
  explicit Reader(const json& root) : cur_(&root) {
    if (!root.is_object()) errors.push_back("<root>: expected an object");
  }

  std::vector<std::string> errors;

  template <class F>
  void section(const char* name, F&& body) {
    if (!cur_->is_object()) return;
    seen_.back().insert(name);
    const auto it = cur_->find(name);
    if (it == cur_->end()) return;
    const std::string key = path(name);
    if (!it->is_object()) {
      errors.push_back(key + ": expected an object");
      return;
    }
    const json* outer = cur_;
    cur_ = &*it;
    prefix_.push_back(name);
    seen_.emplace_back();
    body();
    report_unknown();
    seen_.pop_back();
    prefix_.pop_back();
    cur_ = outer;
  }
  template <class T>
  void field(const char* name, T& v) {
    read(name, [&](const json& j) { decode(j, v); });
  }
  template <class E>
  void field(const char* name, Choice<E> c) {
    read(name, [&](const json& j) {
      if (!j.is_string()) throw std::invalid_argument("expected a string");
      c.value = c.parse(j.get<std::string>());
    });
  }
  void finish() {
    if (cur_->is_object()) report_unknown();
  }

 private:
  template <class F>
  void read(const char* name, F&& f) {
    if (!cur_->is_object()) return;
    seen_.back().insert(name);
    const auto it = cur_->find(name);
    if (it == cur_->end()) return;
    try {
      f(*it);
    } catch (const std::exception& e) {
      errors.push_back(path(name) + ": " + e.what());
    }
  }
  std::string path(const std::string& name) const {
    std::string p;
    for (const auto& s : prefix_) p += s + ".";
    return p + name;
  }
  void report_unknown() {
    for (const auto& [k, v] : cur_->items())
      if (!seen_.back().count(k)) errors.push_back(path(k) + ": unknown key");
  }

  const json* cur_;
  std::vector<std::string> prefix_;
  std::vector<std::set<std::string>> seen_{1};
};

RewardKind parse_reward(const std::string& s) {
  if (s == "dense") return RewardKind::dense;
  if (s == "sparse") return RewardKind::sparse;
  throw std::invalid_argument("expected dense or sparse");
}

template <class V>
void visit(V& v, RunConfig& c) {
  v.section("env", [&] {
    auto& p = c.env.point_mass;
    v.field("name", c.env.name);
    v.field("dt", p.dt);
    v.field("v_max", p.v_max);
    v.field("noise_std", p.noise_std);
    v.field("goal", p.goal);
    v.field("start", p.start);
    v.field("start_noise", p.start_noise);
    v.field("horizon", p.horizon);
    v.field("reward", Choice<RewardKind>{p.reward, parse_reward,
                                         [](RewardKind r) { return r == RewardKind::dense ? "dense" : "sparse"; }});
    v.field("goal_radius", p.goal_radius);
  });
  v.section("dataset", [&] {
    auto& d = c.dataset;
    v.field("behavior", d.behavior);
    v.field("behavior_goal", d.policy.goal);
    v.field("kp", d.policy.kp);
    v.field("kd", d.policy.kd);
    v.field("medium_std", d.policy.medium_std);
    v.field("random_std", d.policy.random_std);
    v.field("episodes", d.episodes);
    v.field("window", d.window);
    v.field("stride", d.stride);
    v.field("std_floor", d.std_floor);
  });
  v.section("diffusion", [&] {
    auto& d = c.diffusion;
    v.field("width", d.net.width);
    v.field("blocks", d.net.blocks);
    v.field("kernel", d.net.kernel);
    v.field("epochs", d.train.epochs);
    v.field("batch", d.train.batch);
    v.field("max_steps", d.train.max_steps);
    v.field("lr", d.train.lr);
    v.field("p_mean", d.train.p_mean);
    v.field("p_std", d.train.p_std);
    v.field("steps", d.schedule.steps);
    v.field("sigma_max", d.schedule.sigma_max);
    v.field("sigma_min", d.schedule.sigma_min);
    v.field("rho", d.schedule.rho);
    v.field("s_churn", d.schedule.s_churn);
    v.field("s_noise", d.schedule.s_noise);
    v.field("s_tmin", d.schedule.s_tmin);
    v.field("s_tmax", d.schedule.s_tmax);
    v.field("trajectories", d.trajectories);
    v.field("chunk", d.chunk);
  });
  v.section("guidance", [&] {
    v.field("lambda", c.guidance.lambda);
    v.field("beta", c.guidance.beta);
    v.field("literal_final_sigma", c.guidance.literal_final_sigma);
  });
  v.section("worldmodel", [&] {
    auto& w = c.worldmodel;
    v.field("members", w.ensemble.members);
    v.field("elites", w.ensemble.elites);
    v.field("hidden", w.ensemble.hidden);
    v.field("min_logvar", w.ensemble.min_logvar);
    v.field("max_logvar", w.ensemble.max_logvar);
    v.field("steps", w.ensemble.steps);
    v.field("batch", w.ensemble.batch);
    v.field("lr", w.ensemble.lr);
    v.field("holdout_fraction", w.ensemble.holdout_fraction);
    v.field("k", w.k);
    v.field("start", Choice<worldmodel::StartMode>{w.start, worldmodel::parse_start_mode,
                                                   [](worldmodel::StartMode m) { return worldmodel::to_string(m); }});
    v.field("count", w.count);
    v.field("policy_std", w.policy_std);
  });
  v.section("agent", [&] {
    auto& a = c.agent.td3;
    v.field("gamma", a.gamma);
    v.field("tau", a.tau);
    v.field("policy_noise", a.policy_noise);
    v.field("noise_clip", a.noise_clip);
    v.field("policy_delay", a.policy_delay);
    v.field("alpha", a.alpha);
    v.field("behavior_cloning", a.behavior_cloning);
    v.field("batch", a.batch);
    v.field("actor_lr", a.actor_lr);
    v.field("critic_lr", a.critic_lr);
    v.field("hidden", a.hidden);
    v.field("action_bound", a.action_bound);
    v.field("terminal_dones", a.terminal_dones);
    v.field("online_steps", c.agent.online.steps);
    v.field("online_random_steps", c.agent.online.random_steps);
    v.field("exploration_std", c.agent.online.exploration_std);
    v.field("eval_episodes", c.agent.eval_episodes);
  });
  v.section("loop", [&] {
    auto& l = c.loop.loop;
    v.field("source", Choice<agent::Source>{c.loop.source, agent::parse_source,
                                            [](agent::Source s) { return agent::to_string(s); }});
    v.field("regime", Choice<agent::Regime>{l.regime, agent::parse_regime,
                                            [](agent::Regime r) { return agent::to_string(r); }});
    v.field("epochs", l.epochs);
    v.field("steps_per_epoch", l.steps_per_epoch);
    v.field("trajectories", l.trajectories);
    v.field("retention", l.retention);
    v.field("eval_interval", l.eval_interval);
    v.field("eval_episodes", l.eval_episodes);
    v.field("rollout_k", l.rollout_k);
    v.field("worldmodel_policy_std", l.worldmodel_policy_std);
  });
  v.section("analysis", [&] {
    auto& a = c.analysis;
    v.field("lambdas", a.lambdas);
    v.field("trajectories", a.trajectories);
    v.field("rollout_k", a.rollout_k);
    v.field("target_steps", a.target_steps);
  });
  v.section("seeds", [&] { v.field("root", c.seed); });
  v.field("workers", c.workers);
  v.field("output_dir", c.output_dir);
}

void check(std::vector<std::string>& errors, bool ok, const std::string& msg) {
  if (!ok) errors.push_back(msg);
}

void validate(const RunConfig& c, std::vector<std::string>& e) {
  check(e, c.env.name == "point_mass", "env.name: only point_mass is supported");
  const auto& p = c.env.point_mass;
  check(e, p.dt > 0, "env.dt: must be positive");
  check(e, p.v_max > 0, "env.v_max: must be positive");
  check(e, p.noise_std >= 0, "env.noise_std: must be non-negative");
  check(e, p.horizon >= 1, "env.horizon: must be >= 1");
  try {
    parse_behavior_level(c.dataset.behavior);
  } catch (const std::exception&) {
    e.push_back("dataset.behavior: expected random, medium or mixed");
  }
  check(e, c.dataset.episodes >= 1, "dataset.episodes: must be >= 1");
  check(e, c.dataset.window >= 1, "dataset.window: must be >= 1");
  check(e, c.dataset.stride >= 1, "dataset.stride: must be >= 1");
  check(e, c.dataset.std_floor > 0, "dataset.std_floor: must be positive");
  check(e, c.diffusion.net.width >= 1, "diffusion.width: must be >= 1");
  check(e, c.diffusion.net.blocks >= 1, "diffusion.blocks: must be >= 1");
  check(e, c.diffusion.net.kernel >= 1 && c.diffusion.net.kernel % 2 == 1, "diffusion.kernel: must be odd");
  check(e, c.dataset.window % (Index{1} << (c.diffusion.net.blocks - 1)) == 0,
        "diffusion.blocks: dataset.window must be divisible by 2^(blocks-1)");
  check(e, c.diffusion.train.epochs >= 1, "diffusion.epochs: must be >= 1");
  check(e, c.diffusion.train.batch >= 1, "diffusion.batch: must be >= 1");
  check(e, c.diffusion.train.max_steps >= 0, "diffusion.max_steps: must be non-negative");
  check(e, c.diffusion.train.lr > 0, "diffusion.lr: must be positive");
  try {
    c.diffusion.schedule.validate();
  } catch (const std::exception& ex) {
    e.push_back(std::string("diffusion: ") + ex.what());
  }
  check(e, c.diffusion.trajectories >= 1, "diffusion.trajectories: must be >= 1");
  check(e, c.diffusion.chunk >= 1, "diffusion.chunk: must be >= 1");
  const auto& w = c.worldmodel;
  check(e, w.ensemble.members >= 1, "worldmodel.members: must be >= 1");
  check(e, w.ensemble.elites >= 1 && w.ensemble.elites <= w.ensemble.members,
        "worldmodel.elites: must lie in [1, members]");
  check(e, w.ensemble.min_logvar < w.ensemble.max_logvar, "worldmodel.min_logvar: must be below max_logvar");
  check(e, w.ensemble.steps >= 1, "worldmodel.steps: must be >= 1");
  check(e, w.ensemble.batch >= 1, "worldmodel.batch: must be >= 1");
  check(e, w.ensemble.holdout_fraction >= 0 && w.ensemble.holdout_fraction < 1,
        "worldmodel.holdout_fraction: must lie in [0, 1)");
  check(e, w.k >= 1, "worldmodel.k: must be >= 1");
  check(e, w.count >= 1, "worldmodel.count: must be >= 1");
  check(e, w.policy_std > 0, "worldmodel.policy_std: must be positive");
  try {
    c.agent.td3.validate();
  } catch (const std::exception& ex) {
    e.push_back(std::string("agent: ") + ex.what());
  }
  check(e, c.agent.online.steps >= 1, "agent.online_steps: must be >= 1");
  check(e, c.agent.eval_episodes >= 1, "agent.eval_episodes: must be >= 1");
  try {
    c.loop.loop.validate();
  } catch (const std::exception& ex) {
    e.push_back(std::string("loop: ") + ex.what());
  }
  check(e, !c.analysis.lambdas.empty(), "analysis.lambdas: must not be empty");
  check(e, c.analysis.trajectories >= 1, "analysis.trajectories: must be >= 1");
  check(e, c.analysis.rollout_k >= 1, "analysis.rollout_k: must be >= 1");
  check(e, c.analysis.target_steps >= 1, "analysis.target_steps: must be >= 1");
  check(e, c.workers >= 1, "workers: must be >= 1");
}

}  // namespace

json to_json(const RunConfig& cfg) {
  RunConfig copy = cfg;
  Writer w;
  visit(w, copy);
  return w.root;
}

RunConfig config_from_json(const json& j) {
  RunConfig cfg;
  Reader r(j);
  visit(r, cfg);
  r.finish();
  if (r.errors.empty()) validate(cfg, r.errors);
  if (!r.errors.empty()) {
    std::ostringstream msg;
    msg << "invalid configuration (" << r.errors.size() << (r.errors.size() == 1 ? " problem" : " problems") << "):";
    for (const auto& e : r.errors) msg << "\n  " << e;
    throw ConfigError(msg.str());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

std::uint64_t subsystem_seed(const RunConfig& cfg, const std::string& subsystem) {
  return derive_seed(cfg.seed, subsystem);
}

}  // namespace trajforge::cli
