#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "trajforge/core/error.hpp"
#include "trajforge/envs/point_mass.hpp"
#include "trajforge/envs/tabular_mdp.hpp"
#include "trajforge/policies/behavior.hpp"
#include "trajforge/worldmodel/ensemble.hpp"

using namespace trajforge;
using namespace trajforge::worldmodel;

namespace {

PointMass2D env_with_noise(double noise) {
  PointMassConfig cfg;
  cfg.noise_std = noise;
  return PointMass2D(cfg);
}

double mean_logvar(const EnsembleDynamics& m, const Dataset& d) {
  Eigen::MatrixXd s(d.state_dim, static_cast<Index>(d.size())), a(d.action_dim, static_cast<Index>(d.size()));
  for (std::size_t k = 0; k < d.size(); ++k) {
    s.col(static_cast<Index>(k)) = d.trajectories[k].states.col(0);
    a.col(static_cast<Index>(k)) = d.trajectories[k].actions.col(0);
  }
  return m.predict(0, s, a).logvar.mean();
}

EnsembleConfig small(std::int64_t steps) {
  EnsembleConfig cfg;
  cfg.members = 3;
  cfg.elites = 2;
  cfg.hidden = {32, 32};
  cfg.steps = steps;
  cfg.batch = 128;
  cfg.seed = 5;
  cfg.workers = 3;
  return cfg;
}

}  // namespace

TEST_CASE("ensemble: rejects empty data and bad shapes") {
  Dataset empty;
  empty.state_dim = 4;
  empty.action_dim = 2;
  CHECK_THROWS_AS(train_ensemble(empty, small(10)), InvalidArgument);
  EnsembleConfig bad = small(10);
  bad.elites = 4;
  CHECK_THROWS_AS(EnsembleDynamics(4, 2, bad), InvalidArgument);
  const EnsembleDynamics m(4, 2, small(10));
  CHECK_THROWS_AS(m.predict(0, Eigen::MatrixXd::Zero(3, 1), Eigen::MatrixXd::Zero(2, 1)), InvalidArgument);
}

TEST_CASE("ensemble: log-variance collapses on noise-free data") {
  const PointMass2D quiet = env_with_noise(0.0), noisy = env_with_noise(0.05);
  const BehaviorPolicy beh(BehaviorLevel::mixed);
  const Dataset dq = collect_dataset(quiet, beh, 64, 16, 4, 1);
  const Dataset dn = collect_dataset(noisy, beh, 64, 16, 4, 1);
  const double before = mean_logvar(EnsembleDynamics(4, 2, small(0)), dq);
  const auto mq = train_ensemble(dq, small(2000));
  const auto mn = train_ensemble(dn, small(2000));
  const double after_quiet = mean_logvar(mq, dq), after_noisy = mean_logvar(mn, dn);
  MESSAGE("mean log-variance: init " << before << ", noise-free " << after_quiet << ", noisy " << after_noisy);
  CHECK(after_quiet < before - 3.0);
  CHECK(after_quiet < after_noisy - 1.0);
  CHECK(after_quiet >= small(0).min_logvar);
}

TEST_CASE("ensemble: single transition is memorized") {
  Dataset d;
  d.window = 1;
  d.state_dim = 4;
  d.action_dim = 2;
  Trajectory t = Trajectory::zeros(4, 2, 1);
  t.states.col(0) << 0.1, -0.2, 0.3, 0.05;
  t.states.col(1) << 0.13, -0.19, 0.4, 0.08;
  t.actions.col(0) << 0.7, 0.2;
  t.rewards[0] = -0.4;
  d.add(t);
  EnsembleConfig cfg = small(400);
  const auto m = train_ensemble(d, cfg);
  const Eigen::VectorXd want = t.states.col(1) - t.states.col(0);
  for (int i = 0; i < m.members(); ++i) {
    const auto p = m.predict(i, t.states.col(0), t.actions.col(0));
    CHECK((p.delta_mean.col(0) - want).squaredNorm() / 4.0 < 1e-4);
    CHECK(std::abs(p.reward[0] + 0.4) < 1e-2);
  }
}

TEST_CASE("ensemble: members disagree more off the data support") {
  const PointMass2D env = env_with_noise(0.02);
  const BehaviorPolicy beh(BehaviorLevel::medium);
  const Dataset d = collect_dataset(env, beh, 64, 16, 4, 2);
  const auto m = train_ensemble(d, small(1500));
  Rng rng(3);
  const Eigen::MatrixXd held = sample_start_states(d, StartMode::any_timestep, 512, rng);
  Eigen::MatrixXd held_a(2, 512), far(4, 512), far_a(2, 512);
  for (Index j = 0; j < 512; ++j) {
    held_a.col(j) = 0.3 * rng.normal_vector(2);
    far.col(j) << rng.uniform(-1, -0.7), rng.uniform(-1, -0.7), rng.uniform(-1, -0.6), rng.uniform(0.6, 1);
    far_a.col(j) = held_a.col(j);
  }
  const double in = m.disagreement(held, held_a).mean(), out = m.disagreement(far, far_a).mean();
  MESSAGE("disagreement in-support " << in << ", off-support " << out);
  CHECK(out > in);
}

TEST_CASE("truncated rollouts: compounding error under the behavior policy") {
  const PointMass2D env = env_with_noise(0.02), oracle = env_with_noise(0.0);
  const BehaviorPolicy beh(BehaviorLevel::medium);
  const Dataset d = collect_dataset(env, beh, 128, 16, 4, 3);
  const auto m = train_ensemble(d, small(2000));
  TruncatedRolloutConfig rc;
  rc.k = 16;
  rc.count = 2048;
  rc.seed = 4;
  rc.workers = 4;
  const auto res = rollout_truncated(m, beh.medium(), d, rc);
  CHECK(res.truncated.empty());
  Eigen::VectorXd curve = Eigen::VectorXd::Zero(16);
  for (const auto& t : res.data.trajectories) {
    const Eigen::MatrixXd truth = replay_actions(oracle, t.states.col(0), t.actions);
    curve += ((t.states - truth).array().square().colwise().sum() / 4.0).matrix().tail(16).transpose();
  }
  curve /= 2048.0;
  MESSAGE("per-step MSE: " << curve.transpose());
  for (Index j = 1; j < 16; ++j) CHECK(curve[j] >= curve[j - 1]);
}

TEST_CASE("truncated rollouts: k = 1, window padding, determinism") {
  const PointMass2D env = env_with_noise(0.02);
  const BehaviorPolicy beh(BehaviorLevel::mixed);
  const Dataset d = collect_dataset(env, beh, 16, 16, 16, 6);
  const auto m = train_ensemble(d, small(200));

  TruncatedRolloutConfig rc;
  rc.k = 1;
  rc.count = 64;
  const auto one = rollout_truncated(m, beh.random(), d, rc);
  CHECK(one.data.window == 1);
  for (const auto& t : one.data.trajectories) CHECK(t.valid_length() == 1);

  rc.k = 5;
  rc.window = 16;
  rc.workers = 1;
  const auto a = rollout_truncated(m, beh.random(), d, rc);
  rc.workers = 4;
  const auto b = rollout_truncated(m, beh.random(), d, rc);
  CHECK(a.data == b.data);
  for (const auto& t : a.data.trajectories) {
    CHECK(t.valid_length() == 5);
    CHECK(t.padding[5] == 1);
  }
  rc.seed = 99;
  CHECK_FALSE(rollout_truncated(m, beh.random(), d, rc).data == a.data);
  rc.k = 0;
  CHECK_THROWS_AS(rollout_truncated(m, beh.random(), d, rc), InvalidArgument);
}

TEST_CASE("ensemble checkpoint round trip") {
  const PointMass2D env = env_with_noise(0.02);
  const Dataset d = collect_dataset(env, BehaviorPolicy(BehaviorLevel::mixed), 8, 16, 16, 7);
  auto m = train_ensemble(d, small(50));
  const auto path = std::filesystem::temp_directory_path() / "trajforge_tests" / "ensemble.tfc";
  std::filesystem::create_directories(path.parent_path());
  m.save(path);
  const auto l = EnsembleDynamics::load(path);
  CHECK(l.elites() == m.elites());
  const Eigen::Vector4d s(0.1, 0.2, 0.0, -0.1);
  const Eigen::Vector2d a(0.3, -0.3);
  CHECK((l.predict(1, s, a).delta_mean - m.predict(1, s, a).delta_mean).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("start-state modes match p0 and the state marginal (chi-squared)") {
  const TabularMDP mdp = TabularMDP::default_instance();
  const TabularPolicy pi = TabularPolicy::uniform(mdp.n_states, mdp.n_actions);
  Dataset d;
  d.window = mdp.horizon;
  d.state_dim = 1;
  d.action_dim = 1;
  Rng rng(8);
  for (int e = 0; e < 4000; ++e) d.add(rollout(mdp, pi, sample_initial_state(mdp, rng), mdp.horizon, rng));

  // Empirical p(s_0) and state marginal of the dataset the sampler draws from.
  std::vector<double> initial(static_cast<std::size_t>(mdp.n_states), 0.0);
  std::vector<double> marginal(initial.size(), 0.0);
  double total = 0;
  for (const auto& t : d.trajectories) {
    initial[static_cast<std::size_t>(t.states(0, 0))] += 1.0 / static_cast<double>(d.size());
    for (Index c = 0; c < t.valid_length(); ++c) {
      marginal[static_cast<std::size_t>(t.states(0, c))] += 1;
      total += 1;
    }
  }
  for (auto& m : marginal) m /= total;
  for (std::size_t i = 0; i < initial.size(); ++i) CHECK(std::abs(initial[i] - mdp.initial[i]) < 0.03);

  auto chi2 = [&](StartMode mode, const std::vector<double>& p) {
    Rng r(9);
    const std::size_t n = 20000;
    const Eigen::MatrixXd s = sample_start_states(d, mode, n, r);
    std::vector<double> counts(p.size(), 0.0);
    for (Index j = 0; j < s.cols(); ++j) counts[static_cast<std::size_t>(s(0, j))] += 1;
    double stat = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
      if (p[i] > 0) stat += std::pow(counts[i] - n * p[i], 2) / (n * p[i]);
    return stat;
  };
  // 99.9% quantile of chi-squared with 2 degrees of freedom.
  CHECK(chi2(StartMode::initial_states, initial) < 13.82);
  CHECK(chi2(StartMode::any_timestep, marginal) < 13.82);
  // The two distributions differ, so each mode fails the other's test.
  CHECK(chi2(StartMode::initial_states, marginal) > 13.82);
  CHECK_THROWS_AS(parse_start_mode("middle"), InvalidArgument);
}
