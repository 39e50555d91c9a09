#include "trajforge/core/trajectory.hpp"

#include <algorithm>
#include <cmath>

#include "trajforge/core/container.hpp"
#include "trajforge/core/error.hpp"

namespace trajforge {

Trajectory Trajectory::zeros(Index state_dim, Index action_dim, Index length) {
  Trajectory t;
  t.states = Eigen::MatrixXd::Zero(state_dim, length + 1);
  t.actions = Eigen::MatrixXd::Zero(action_dim, length);
  t.rewards = Eigen::VectorXd::Zero(length);
  t.dones.assign(static_cast<std::size_t>(length), 0);
  t.padding.assign(static_cast<std::size_t>(length), 0);
  return t;
}

Index Trajectory::valid_length() const {
  return static_cast<Index>(std::count(padding.begin(), padding.end(), std::uint8_t{0}));
}

void Trajectory::validate() const {
  const Index w = actions.cols();
  if (states.cols() != w + 1) throw InvalidArgument("trajectory: states must have W+1 columns");
  if (rewards.size() != w || static_cast<Index>(dones.size()) != w || static_cast<Index>(padding.size()) != w)
    throw InvalidArgument("trajectory: rewards/dones/padding must have W entries");
  bool seen_pad = false;
  bool seen_done = false;
  for (Index t = 0; t < w; ++t) {
    const bool pad = padding[static_cast<std::size_t>(t)] != 0;
    if (seen_pad && !pad) throw InvalidArgument("trajectory: padding must be a suffix");
    if (seen_done && !pad) throw InvalidArgument("trajectory: entries after done must be padding");
    seen_pad = seen_pad || pad;
    seen_done = seen_done || (!pad && dones[static_cast<std::size_t>(t)] != 0);
  }
}

bool operator==(const Trajectory& a, const Trajectory& b) {
  auto same = [](const auto& x, const auto& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
  };
  return same(a.states, b.states) && same(a.actions, b.actions) && same(a.rewards, b.rewards) &&
         a.dones == b.dones && a.padding == b.padding && a.t0 == b.t0;
}

bool operator==(const NormStats& a, const NormStats& b) {
  auto same = [](const Eigen::VectorXd& x, const Eigen::VectorXd& y) { return x.size() == y.size() && x == y; };
  return same(a.state_mean, b.state_mean) && same(a.state_std, b.state_std) && same(a.action_mean, b.action_mean) &&
         same(a.action_std, b.action_std) && a.reward_mean == b.reward_mean && a.reward_std == b.reward_std &&
         a.warnings == b.warnings;
}

bool operator==(const Dataset& a, const Dataset& b) {
  return a.trajectories == b.trajectories && a.window == b.window && a.state_dim == b.state_dim &&
         a.action_dim == b.action_dim && a.norm_stats == b.norm_stats && a.normalized == b.normalized &&
         a.source_tag == b.source_tag;
}

void Dataset::add(Trajectory t) {
  t.validate();
  if (t.length() != window || t.state_dim() != state_dim || t.action_dim() != action_dim)
    throw InvalidArgument("dataset: trajectory shape does not match dataset");
  trajectories.push_back(std::move(t));
}

std::vector<Trajectory> window(const Trajectory& episode, Index w, Index stride) {
  if (w <= 0 || stride <= 0) throw InvalidArgument("window: W and stride must be positive");
  const Index len = episode.valid_length();
  if (len < 1) throw InvalidArgument("window: episode has no transitions");

  std::vector<Trajectory> out;
  for (Index start = 0;; start += stride) {
    Trajectory t = Trajectory::zeros(episode.state_dim(), episode.action_dim(), w);
    t.t0 = episode.t0 + start;
    const Index real = std::min(w, len - start);
    t.states.leftCols(real + 1) = episode.states.middleCols(start, real + 1);
    t.actions.leftCols(real) = episode.actions.middleCols(start, real);
    t.rewards.head(real) = episode.rewards.segment(start, real);
    for (Index i = 0; i < real; ++i) t.dones[static_cast<std::size_t>(i)] = episode.dones[static_cast<std::size_t>(start + i)];
    for (Index i = real; i < w; ++i) {
      t.states.col(i + 1) = t.states.col(real);
      t.dones[static_cast<std::size_t>(i)] = 1;
      t.padding[static_cast<std::size_t>(i)] = 1;
    }
    out.push_back(std::move(t));
    if (start + w >= len) break;
  }
  return out;
}

namespace {

// Visits every non-padding state column and every non-padding transition.
template <typename StateFn, typename TransitionFn>
void for_each_valid(const Dataset& d, StateFn&& on_state, TransitionFn&& on_transition) {
  for (const auto& t : d.trajectories) {
    on_state(t.states.col(0));
    for (Index i = 0; i < t.length(); ++i) {
      if (t.padding[static_cast<std::size_t>(i)]) break;
      on_state(t.states.col(i + 1));
      on_transition(t.actions.col(i), t.rewards[i]);
    }
  }
}

double clamp_std(double s, double floor, const std::string& name, std::vector<std::string>& warnings) {
  if (!(s >= floor)) {
    warnings.push_back(name + ": std below floor, clamped");
    return floor;
  }
  return s;
}

}  // namespace

NormStats compute_norm_stats(const Dataset& d, double floor) {
  const Index ds = d.state_dim;
  const Index da = d.action_dim;
  Eigen::VectorXd s_sum = Eigen::VectorXd::Zero(ds), s_sq = Eigen::VectorXd::Zero(ds);
  Eigen::VectorXd a_sum = Eigen::VectorXd::Zero(da), a_sq = Eigen::VectorXd::Zero(da);
  double r_sum = 0, r_sq = 0;
  double ns = 0, na = 0;

  // Two passes (mean, then centered squares) for accuracy.
  for_each_valid(
      d, [&](const auto& s) { s_sum += s; ns += 1; },
      [&](const auto& a, double r) {
        a_sum += a;
        r_sum += r;
        na += 1;
      });
  NormStats st;
  st.state_mean = ns > 0 ? Eigen::VectorXd(s_sum / ns) : Eigen::VectorXd::Zero(ds);
  st.action_mean = na > 0 ? Eigen::VectorXd(a_sum / na) : Eigen::VectorXd::Zero(da);
  st.reward_mean = na > 0 ? r_sum / na : 0.0;
  for_each_valid(
      d, [&](const auto& s) { s_sq += (s - st.state_mean).cwiseAbs2(); },
      [&](const auto& a, double r) {
        a_sq += (a - st.action_mean).cwiseAbs2();
        r_sq += (r - st.reward_mean) * (r - st.reward_mean);
      });
  st.state_std.resize(ds);
  st.action_std.resize(da);
  for (Index i = 0; i < ds; ++i)
    st.state_std[i] = clamp_std(ns > 0 ? std::sqrt(s_sq[i] / ns) : 0.0, floor, "state[" + std::to_string(i) + "]", st.warnings);
  for (Index i = 0; i < da; ++i)
    st.action_std[i] =
        clamp_std(na > 0 ? std::sqrt(a_sq[i] / na) : 0.0, floor, "action[" + std::to_string(i) + "]", st.warnings);
  st.reward_std = clamp_std(na > 0 ? std::sqrt(r_sq / na) : 0.0, floor, "reward", st.warnings);
  return st;
}

Dataset normalize(Dataset d, double floor) {
  if (d.normalized) return d;
  if (!d.norm_stats) d.norm_stats = compute_norm_stats(d, floor);
  const NormStats& st = *d.norm_stats;
  for (auto& t : d.trajectories) {
    t.states = (t.states.colwise() - st.state_mean).array().colwise() / st.state_std.array();
    t.actions = (t.actions.colwise() - st.action_mean).array().colwise() / st.action_std.array();
    t.rewards = (t.rewards.array() - st.reward_mean) / st.reward_std;
  }
  d.normalized = true;
  return d;
}

Dataset denormalize(Dataset d) {
  if (!d.normalized) return d;
  if (!d.norm_stats) throw InvalidState("denormalize: dataset marked normalized but has no stats");
  const NormStats& st = *d.norm_stats;
  for (auto& t : d.trajectories) {
    t.states = (t.states.array().colwise() * st.state_std.array()).colwise() + st.state_mean.array();
    t.actions = (t.actions.array().colwise() * st.action_std.array()).colwise() + st.action_mean.array();
    t.rewards = t.rewards.array() * st.reward_std + st.reward_mean;
  }
  d.normalized = false;
  return d;
}

namespace {

nlohmann::json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd json_vec(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
}

Index record_floats(Index w, Index ds, Index da) { return (w + 1) * ds + w * da + 3 * w; }

}  // namespace

nlohmann::json to_json(const NormStats& s) {
  return {{"state_mean", vec_json(s.state_mean)},   {"state_std", vec_json(s.state_std)},
          {"action_mean", vec_json(s.action_mean)}, {"action_std", vec_json(s.action_std)},
          {"reward_mean", s.reward_mean},           {"reward_std", s.reward_std},
          {"warnings", s.warnings}};
}

NormStats norm_stats_from_json(const nlohmann::json& ns) {
  NormStats s;
  s.state_mean = json_vec(ns.at("state_mean"));
  s.state_std = json_vec(ns.at("state_std"));
  s.action_mean = json_vec(ns.at("action_mean"));
  s.action_std = json_vec(ns.at("action_std"));
  s.reward_mean = ns.at("reward_mean").get<double>();
  s.reward_std = ns.at("reward_std").get<double>();
  s.warnings = ns.at("warnings").get<std::vector<std::string>>();
  return s;
}

void save(const Dataset& d, const std::filesystem::path& path) {
  nlohmann::json h;
  h["version"] = 1;
  h["trajectory_count"] = d.trajectories.size();
  h["W"] = d.window;
  h["state_dim"] = d.state_dim;
  h["action_dim"] = d.action_dim;
  h["source_tag"] = d.source_tag;
  h["normalized"] = d.normalized;
  h["norm_stats"] = d.norm_stats ? to_json(*d.norm_stats) : nlohmann::json(nullptr);
  std::vector<std::int64_t> t0;
  for (const auto& t : d.trajectories) t0.push_back(t.t0);
  h["t0"] = t0;

  std::vector<float> payload;
  payload.reserve(d.trajectories.size() * static_cast<std::size_t>(record_floats(d.window, d.state_dim, d.action_dim)));
  for (const auto& t : d.trajectories) {
    if (t.length() != d.window || t.state_dim() != d.state_dim || t.action_dim() != d.action_dim)
      throw InvalidArgument("save: trajectory shape does not match dataset header");
    for (Index i = 0; i < t.states.size(); ++i) payload.push_back(static_cast<float>(t.states.data()[i]));
    for (Index i = 0; i < t.actions.size(); ++i) payload.push_back(static_cast<float>(t.actions.data()[i]));
    for (Index i = 0; i < t.rewards.size(); ++i) payload.push_back(static_cast<float>(t.rewards[i]));
    for (auto v : t.dones) payload.push_back(static_cast<float>(v));
    for (auto v : t.padding) payload.push_back(static_cast<float>(v));
  }
  write_container(path, kDatasetMagic, h, payload);
}

Dataset load(const std::filesystem::path& path) {
  Container c = read_container(path, kDatasetMagic);
  const auto& h = c.header;
  Dataset d;
  std::size_t count = 0;
  std::vector<std::int64_t> t0;
  try {
    if (h.at("version").get<int>() != 1) throw LoadError(LoadErrorKind::malformed_header, "unsupported version");
    count = h.at("trajectory_count").get<std::size_t>();
    d.window = h.at("W").get<Index>();
    d.state_dim = h.at("state_dim").get<Index>();
    d.action_dim = h.at("action_dim").get<Index>();
    d.source_tag = h.at("source_tag").get<std::string>();
    d.normalized = h.at("normalized").get<bool>();
    t0 = h.at("t0").get<std::vector<std::int64_t>>();
    const auto& ns = h.at("norm_stats");
    if (!ns.is_null()) d.norm_stats = norm_stats_from_json(ns);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(LoadErrorKind::malformed_header, path.string() + ": " + e.what());
  }
  if (d.window <= 0 || d.state_dim <= 0 || d.action_dim <= 0)
    throw LoadError(LoadErrorKind::malformed_header, path.string() + ": dimensions must be positive");
  if (t0.size() != count) throw LoadError(LoadErrorKind::dimension_mismatch, path.string() + ": t0 count mismatch");
  if (d.norm_stats) {
    const auto& s = *d.norm_stats;
    if (s.state_mean.size() != d.state_dim || s.state_std.size() != d.state_dim ||
        s.action_mean.size() != d.action_dim || s.action_std.size() != d.action_dim)
      throw LoadError(LoadErrorKind::dimension_mismatch, path.string() + ": norm_stats dimensions do not match header");
  }

  const auto per = static_cast<std::size_t>(record_floats(d.window, d.state_dim, d.action_dim));
  if (c.payload.size() < per * count)
    throw LoadError(LoadErrorKind::truncated_payload, path.string() + ": payload holds " +
                                                          std::to_string(c.payload.size() / per) + " of " +
                                                          std::to_string(count) + " trajectories");
  if (c.payload.size() > per * count)
    throw LoadError(LoadErrorKind::dimension_mismatch, path.string() + ": payload larger than header dimensions");

  const float* p = c.payload.data();
  d.trajectories.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Trajectory t = Trajectory::zeros(d.state_dim, d.action_dim, d.window);
    t.t0 = t0[k];
    for (Index i = 0; i < t.states.size(); ++i) t.states.data()[i] = *p++;
    for (Index i = 0; i < t.actions.size(); ++i) t.actions.data()[i] = *p++;
    for (Index i = 0; i < t.rewards.size(); ++i) t.rewards[i] = *p++;
    for (auto& v : t.dones) v = static_cast<std::uint8_t>(*p++ != 0.0f);
    for (auto& v : t.padding) v = static_cast<std::uint8_t>(*p++ != 0.0f);
    d.trajectories.push_back(std::move(t));
  }
  return d;
}

}  // namespace trajforge
