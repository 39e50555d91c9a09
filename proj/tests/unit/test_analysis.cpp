#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "trajforge/analysis/metrics.hpp"
#include "trajforge/analysis/comparison.hpp"
#include "trajforge/core/error.hpp"
#include "trajforge/policies/behavior.hpp"

using namespace trajforge;
using namespace trajforge::analysis;

namespace {

PointMass2D quiet() {
  PointMassConfig c;
  c.noise_std = 0.0;
  return PointMass2D(c);
}

Dataset rollouts(const PointMass2D& env, const Policy& pi, std::size_t n, bool deterministic, std::uint64_t seed) {
  Dataset d;
  d.window = 16;
  d.state_dim = 4;
  d.action_dim = 2;
  for (std::size_t e = 0; e < n; ++e) {
    Rng rng(derive_seed(seed, "analysis-test", e));
    const auto s0 = env.reset(rng);
    d.add(deterministic ? rollout_deterministic(env, pi, s0, 16, rng) : rollout(env, pi, s0, 16, rng));
  }
  return d;
}

FunctionPolicy small_gaussian() {
  return FunctionPolicy(
      4, 2, [](const Eigen::VectorXd& s) -> Eigen::VectorXd { return 0.3 * s.head<2>().array().tanh(); },
      Eigen::Vector2d(std::log(0.2), std::log(0.15)));
}

}  // namespace

TEST_CASE("likelihood: own rollouts match the Gaussian entropy identity") {
  const auto pi = small_gaussian();
  const Dataset d = rollouts(quiet(), pi, 2048, false, 1);
  const auto r = trajectory_likelihood(pi, d);
  const double expected = -0.5 * (2 + std::log(2 * std::numbers::pi * 0.04) + std::log(2 * std::numbers::pi * 0.0225));
  CHECK(expected == doctest::Approx(expected_log_prob(pi)));
  MESSAGE("aggregate " << r.aggregate.mean << " +- " << r.aggregate.se << " vs " << expected);
  CHECK(std::abs(r.aggregate.mean - expected) < 2 * r.aggregate.se);
  CHECK(r.aggregate.n == 2048);
}

TEST_CASE("likelihood: deterministic wrapper on its own mode, singleton, order invariance") {
  auto base = std::make_shared<FunctionPolicy>(small_gaussian());
  struct MeanOnly final : DeterministicPolicy {
    std::shared_ptr<const Policy> p;
    Index state_dim() const override { return 4; }
    Index action_dim() const override { return 2; }
    Eigen::VectorXd act(const Eigen::VectorXd& s) const override { return p->mean(s); }
  };
  auto det = std::make_shared<MeanOnly>();
  det->p = base;
  const DeterministicAsGaussian wrap(det);
  const Dataset d = rollouts(quiet(), wrap, 8, true, 2);
  for (double v : trajectory_likelihood(wrap, d).per_trajectory) CHECK(v == doctest::Approx(-std::log(2 * std::numbers::pi)));

  Dataset one = d;
  one.trajectories.resize(1);
  const auto r1 = trajectory_likelihood(*base, one);
  CHECK(r1.aggregate.mean == r1.per_trajectory[0]);
  CHECK(r1.aggregate.se == 0.0);

  const Dataset many = rollouts(quiet(), *base, 64, false, 3);
  Dataset shuffled = many;
  std::reverse(shuffled.trajectories.begin(), shuffled.trajectories.end());
  CHECK(trajectory_likelihood(*base, shuffled).aggregate.mean ==
        doctest::Approx(trajectory_likelihood(*base, many).aggregate.mean).epsilon(1e-12));

  const FunctionPolicy wrong(
      3, 2, [](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(2); }, Eigen::Vector2d::Zero());
  CHECK_THROWS_AS(trajectory_likelihood(wrong, d), InvalidArgument);
}

TEST_CASE("dynamics error: zero on oracle data and a constructed perturbation") {
  const PointMass2D env = quiet();
  const BehaviorPolicy beh(BehaviorLevel::mixed);
  Dataset d = rollouts(env, beh.random(), 10, false, 4);
  const auto zero = dynamics_error(env, d);
  CHECK(zero.mse.cwiseAbs().maxCoeff() == 0.0);

  const double delta = 0.05;
  d.trajectories[3].states(1, 6) += delta;
  const auto pert = dynamics_error(env, d);
  CHECK(pert.mse[5] == doctest::Approx(delta * delta / 4.0 / 10.0));
  for (Index j = 0; j < 16; ++j)
    if (j != 5) CHECK(pert.mse[j] == 0.0);

  Dataset bad;
  bad.state_dim = 3;
  bad.action_dim = 2;
  CHECK_THROWS_AS(dynamics_error(env, bad), InvalidArgument);
  CHECK_THROWS_AS(dynamics_error(PointMass2D{}, d), ConfigError);
}

TEST_CASE("coverage is monotone under dataset union") {
  const PointMass2D env{PointMassConfig{}};
  const Dataset behavior = collect_dataset(env, BehaviorPolicy(BehaviorLevel::medium), 16, 16, 16, 1);
  const Dataset a = collect_dataset(env, BehaviorPolicy(BehaviorLevel::random), 16, 16, 16, 2);
  BehaviorConfig to_task;
  to_task.goal = env.config().goal;
  const Dataset b = collect_dataset(env, BehaviorPolicy(BehaviorLevel::medium, to_task), 16, 16, 16, 3);
  Dataset ab = a;
  for (const auto& t : b.trajectories) ab.add(t);
  const double ca = coverage_beyond(a, behavior), cb = coverage_beyond(b, behavior), cab = coverage_beyond(ab, behavior);
  MESSAGE("coverage " << ca << ", " << cb << ", union " << cab);
  CHECK(cab >= std::max(ca, cb));
  CHECK(cb > 0.0);
  CHECK(coverage_beyond(behavior, behavior) == 0.0);
}

TEST_CASE("comparison harness: offline row, skipped sources and CSV layout") {
  const PointMass2D env{PointMassConfig{}}, oracle = quiet();
  const Dataset offline = collect_dataset(env, BehaviorPolicy(BehaviorLevel::medium), 32, 16, 16, 5);
  const Dataset other = collect_dataset(oracle, BehaviorPolicy(BehaviorLevel::random), 8, 16, 16, 6);
  ComparisonInputs in;
  in.behavior = &offline;
  in.oracle = &oracle;
  in.seed = 9;
  in.policies = {{"gauss", std::make_shared<FunctionPolicy>(small_gaussian())}};
  in.sources = {{"offline", "", 0.0, &offline}, {"guided", "gauss", 1.0, &other}};
  std::vector<std::string> notices;
  const auto rows = compare_sources(in, &notices);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].source == "offline");
  CHECK(rows[0].dyn_mse.cwiseAbs().maxCoeff() == 0.0);
  CHECK(rows[0].coverage == 0.0);
  CHECK(rows[1].dyn_mse.cwiseAbs().maxCoeff() == 0.0);
  CHECK(rows[1].lambda == 1.0);
  CHECK(notices.size() == 3);

  const auto path = std::filesystem::temp_directory_path() / "trajforge_tests" / "comparison.csv";
  std::filesystem::create_directories(path.parent_path());
  write_comparison_csv(path, rows, 16);
  std::ifstream f(path);
  std::string header;
  std::getline(f, header);
  CHECK(header.rfind("source,policy,lambda,likelihood_mean,likelihood_se,dyn_mse_at_1,", 0) == 0);
  CHECK(header.find("dyn_mse_at_16,coverage,seed") != std::string::npos);
}
