#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "trajforge/core/error.hpp"
#include "trajforge/oracle/gaussian.hpp"
#include "trajforge/oracle/tabular.hpp"

using namespace trajforge;
using namespace trajforge::oracle;

namespace {

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

// Policy with strictly positive entries so the importance identity applies.
TabularPolicy positive_policy(int ns, int na, Rng& rng) {
  TabularPolicy p = TabularPolicy::random(ns, na, rng);
  for (int s = 0; s < ns; ++s) {
    double z = 0;
    for (int a = 0; a < na; ++a) z += (p.at(s, a) += 0.01);
    for (int a = 0; a < na; ++a) p.at(s, a) /= z;
  }
  return p;
}

}  // namespace

TEST_CASE("enumeration: degenerate chain and uniform product") {
  TabularMDP det = TabularMDP::deterministic(3, 2, 3);
  det.initial = {1.0, 0.0, 0.0};
  TabularPolicy always0{3, 2, {1, 0, 1, 0, 1, 0}};
  const auto one = enumerate_distribution(det, always0, 3);
  REQUIRE(one.probs.size() == 1);
  CHECK(one.probs[0] == 1.0);
  CHECK(one.trajectories[0] == TabTrajectory{0, 0, 1, 0, 2, 0, 0});

  const auto uni = enumerate_distribution(det, TabularPolicy::uniform(3, 2), 3);
  CHECK(uni.probs.size() == 8);
  for (double p : uni.probs) CHECK(p == 0.125);
}

TEST_CASE("enumeration: normalization over 50 random MDPs and the size limit") {
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const auto mdp = TabularMDP::random(3, 2, 3, rng);
    const auto d = enumerate_distribution(mdp, TabularPolicy::random(3, 2, rng), 3);
    CHECK(std::abs(sum(d.probs) - 1.0) < 1e-10);
    for (double p : d.probs) CHECK(p >= 0.0);
  }
  const auto big = TabularMDP::deterministic(10, 10, 3);
  CHECK_THROWS_WITH_AS(enumerate_trajectories(big, 3), doctest::Contains("10000000"), InvalidArgument);
}

TEST_CASE("importance identity: equal policies, random pairs, support violation") {
  const auto mdp = TabularMDP::default_instance();
  const auto off = default_behavior_policy();
  CHECK(check_importance_identity(mdp, off, off, 3) == 0.0);

  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const auto m = TabularMDP::random(3, 2, 3, rng);
    CHECK(check_importance_identity(m, positive_policy(3, 2, rng), positive_policy(3, 2, rng), 3) < 1e-12);
  }

  TabularPolicy holes = off;
  holes.at(1, 1) = 0.0;
  holes.at(1, 0) = 1.0;
  try {
    check_importance_identity(mdp, holes, default_target_policy(), 3);
    FAIL("expected a support error");
  } catch (const SupportError& e) {
    CHECK_FALSE(e.flagged().empty());
    for (const auto& t : e.flagged()) {
      bool uses = false;
      for (std::size_t j = 1; j < t.size(); j += 2) uses = uses || (t[j - 1] == 1 && t[j] == 1);
      CHECK(uses);
    }
  }
}

TEST_CASE("behavior-regularized family: endpoints, symmetry and argmax shift") {
  const auto mdp = TabularMDP::default_instance();
  const auto tab = build_table(mdp, default_behavior_policy(), default_target_policy(), 3, {0.0, 0.5, 1.0, 2.0, 4.0});
  CHECK(std::abs(sum(tab.p_off) - 1.0) < 1e-10);
  CHECK(std::abs(sum(tab.p_target) - 1.0) < 1e-10);
  CHECK(symmetry_error(tab) < 1e-12);

  CHECK(tab.F[0] == tab.p_off);
  // lambda = 1: F is p_off q_target normalized, which by symmetry is p_target q_off normalized.
  double z1 = 0, z2 = 0;
  for (std::size_t i = 0; i < tab.size(); ++i) {
    z1 += tab.p_off[i] * tab.q_target[i];
    z2 += tab.p_target[i] * tab.q_off[i];
  }
  for (std::size_t i = 0; i < tab.size(); ++i) {
    CHECK(std::abs(tab.F[2][i] - tab.p_off[i] * tab.q_target[i] / z1) < 1e-15);
    CHECK(std::abs(tab.F[2][i] - tab.p_target[i] * tab.q_off[i] / z2) < 1e-12);
  }
  for (const auto& f : tab.F) CHECK(std::abs(sum(f) - 1.0) < 1e-10);

  const std::size_t mode0 = argmax(tab.F[0]), mode4 = argmax(tab.F[4]);
  MESSAGE("argmax at lambda 0: " << describe(tab.trajectories[mode0]) << ", at lambda 4: "
                                 << describe(tab.trajectories[mode4]));
  CHECK(mode0 == argmax(tab.p_off));
  CHECK(mode4 != mode0);
  CHECK(tab.q_target[mode4] > tab.q_target[mode0]);

  TrajectoryTable zero = tab;
  std::fill(zero.q_target.begin(), zero.q_target.end(), 0.0);
  CHECK_THROWS_AS(behavior_regularized(zero, 1.0), InvalidArgument);
}

TEST_CASE("behavior-regularized family is continuous in lambda") {
  const auto mdp = TabularMDP::default_instance();
  const auto tab = build_table(mdp, default_behavior_policy(), default_target_policy(), 3, {});
  double prev = INFINITY;
  for (double step : {1.0, 0.5, 0.25, 0.125, 0.0625}) {
    double worst = 0;
    for (double l = 0; l + step <= 4.0 + 1e-12; l += step)
      worst = std::max(worst, total_variation(behavior_regularized(tab, l), behavior_regularized(tab, l + step)));
    CHECK(worst < prev);
    prev = worst;
  }
  CHECK(prev < 0.05);
}

TEST_CASE("oracle CSV export") {
  const auto tab = build_table(TabularMDP::default_instance(), default_behavior_policy(), default_target_policy(), 3,
                               {0.0, 1.0});
  const auto path = std::filesystem::temp_directory_path() / "trajforge_tests" / "oracle.csv";
  std::filesystem::create_directories(path.parent_path());
  write_table_csv(path, tab);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "tau_index,trajectory,p_off,p_target,q_off,q_target,F_lambda_0,F_lambda_1");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == tab.size());
}

TEST_CASE("gaussian score identities") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    GaussianChain c;
    c.m0 = rng.normal();
    c.v0 = rng.uniform(0.2, 2.0);
    c.dt = rng.uniform(0.05, 0.5);
    c.vt = rng.uniform(0.01, 0.5);
    c.off = {rng.normal(), rng.normal(), rng.uniform(0.3, 1.5)};
    c.target = {rng.normal(), rng.normal(), rng.uniform(0.3, 1.5)};
    const auto r = check_score_identity(c, {0.0, 0.5, 1.0, 2.0}, 100, 10 + trial);
    CHECK(r.identity_error < 1e-10);
    CHECK(r.lambda_error < 1e-10);
    CHECK(r.lambda0_error == 0.0);
  }
  GaussianChain same;
  same.target = same.off = {0.4, -0.2, 0.7};
  Eigen::Vector3d m;
  Eigen::Matrix3d cov;
  chain_moments(same, same.off, m, cov);
  const Eigen::Vector3d tau(0.3, 0.1, -0.2);
  CHECK((policy_score(same.target, tau) - policy_score(same.off, tau)).norm() == 0.0);
  CHECK(check_score_identity(same, {1.0}, 100, 1).identity_error < 1e-10);
}

TEST_CASE("noised trajectories lose the per-step factorization") {
  const auto mdp = TabularMDP::default_instance();
  const auto off = default_behavior_policy(), target = default_target_policy();
  // Conditioning on the next state changes the action density once noise is added.
  const auto c = noised_action_conditionals(mdp, target, 0.5, {0.0, 0.4, 1.0});
  MESSAGE("p(a | s0, s1) = " << c.given_all << ", p(a | s0) = " << c.given_state);
  CHECK(std::abs(c.given_all - c.given_state) > 1e-3);

  const std::vector<double> point{0.0, 1.0, 1.0, 1.0, 2.0, 0.0, 1.0};
  CHECK(noised_factorization_gap(mdp, off, target, 3, 0.0, point) < 1e-12);
  const double g_big = noised_factorization_gap(mdp, off, target, 3, 0.5, point);
  const double g_small = noised_factorization_gap(mdp, off, target, 3, 0.1, point);
  MESSAGE("factorization gap at sigma 0.5: " << g_big << ", at 0.1: " << g_small);
  CHECK(g_big > 1e-3);
  CHECK(g_small < g_big);
}
