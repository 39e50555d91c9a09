#pragma once

#include <cstdint>
#include <vector>

namespace trajforge::oracle {

/// Worst-case deviations of the exact identities, over random instances.
struct OracleReport {
  int mdps = 0;
  int points = 0;
  double importance = 0.0;
  double symmetry = 0.0;
  double score_identity = 0.0;
  double score_lambda = 0.0;
  /// |F(lambda = 0) - p_off| and |F(1) - normalized p_off q_target| on the default MDP.
  double endpoint0 = 0.0;
  double endpoint1 = 0.0;

  double worst() const;
};

/// Importance and symmetry identities on `mdps` random 3-state, 2-action,
/// horizon-3 MDPs with strictly positive policies; Gaussian score identities
/// on `points` points for each of `chains` random linear-Gaussian chains.
OracleReport run_oracle_checks(int mdps, int chains, int points, const std::vector<double>& lambdas,
                               std::uint64_t seed);

}  // namespace trajforge::oracle
