#include "trajforge/oracle/checks.hpp"

#include <algorithm>
#include <cmath>

#include "trajforge/core/random.hpp"
#include "trajforge/oracle/gaussian.hpp"
#include "trajforge/oracle/tabular.hpp"

namespace trajforge::oracle {

double OracleReport::worst() const {
  return std::max({importance, symmetry, score_identity, score_lambda, endpoint0, endpoint1});
}

namespace {

TabularPolicy positive_policy(int ns, int na, Rng& rng) {
  TabularPolicy p = TabularPolicy::random(ns, na, rng);
  for (int s = 0; s < ns; ++s) {
    double z = 0.0;
    for (int a = 0; a < na; ++a) z += (p.at(s, a) += 0.01);
    for (int a = 0; a < na; ++a) p.at(s, a) /= z;
  }
  return p;
}

}  // namespace

OracleReport run_oracle_checks(int mdps, int chains, int points, const std::vector<double>& lambdas,
                               std::uint64_t seed) {
  OracleReport r;
  r.mdps = mdps;
  r.points = chains * points;
  Rng rng(derive_seed(seed, "oracle-mdps"));
  for (int i = 0; i < mdps; ++i) {
    const auto mdp = TabularMDP::random(3, 2, 3, rng);
    const auto off = positive_policy(3, 2, rng), target = positive_policy(3, 2, rng);
    r.importance = std::max(r.importance, check_importance_identity(mdp, off, target, 3));
    r.symmetry = std::max(r.symmetry, symmetry_error(build_table(mdp, off, target, 3, {})));
  }

  Rng grng(derive_seed(seed, "oracle-chains"));
  for (int i = 0; i < chains; ++i) {
    GaussianChain c;
    c.m0 = grng.normal();
    c.v0 = grng.uniform(0.2, 2.0);
    c.dt = grng.uniform(0.05, 0.5);
    c.vt = grng.uniform(0.01, 0.5);
    c.off = {grng.normal(), grng.normal(), grng.uniform(0.3, 1.5)};
    c.target = {grng.normal(), grng.normal(), grng.uniform(0.3, 1.5)};
    const auto s = check_score_identity(c, lambdas, points, derive_seed(seed, "oracle-points", i));
    r.score_identity = std::max(r.score_identity, s.identity_error);
    r.score_lambda = std::max({r.score_lambda, s.lambda_error, s.lambda0_error});
  }

  const auto mdp = TabularMDP::default_instance();
  const auto tab = build_table(mdp, default_behavior_policy(), default_target_policy(), mdp.horizon, {0.0, 1.0});
  double z = 0.0;
  for (std::size_t i = 0; i < tab.size(); ++i) z += tab.p_off[i] * tab.q_target[i];
  for (std::size_t i = 0; i < tab.size(); ++i) {
    r.endpoint0 = std::max(r.endpoint0, std::abs(tab.F[0][i] - tab.p_off[i]));
    r.endpoint1 = std::max(r.endpoint1, std::abs(tab.F[1][i] - tab.p_off[i] * tab.q_target[i] / z));
  }
  return r;
}

}  // namespace trajforge::oracle
