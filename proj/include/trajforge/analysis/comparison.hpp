#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "trajforge/analysis/metrics.hpp"

namespace trajforge::analysis {

/// The five experience sources, in report order.
inline const std::vector<std::string> kSources{"offline", "episodic_wm", "truncated_wm", "unguided", "guided"};

/// One dataset for the comparison. An empty `policy` means the dataset does
/// not depend on the target policy (offline data, unguided samples).
struct SourceData {
  std::string source;
  std::string policy;
  double lambda = 0.0;
  const Dataset* data = nullptr;
};

struct TargetPolicy {
  std::string name;
  std::shared_ptr<const Policy> policy;  // raw units
};

struct ComparisonRow {
  std::string source;
  std::string policy;
  double lambda = 0.0;
  double likelihood_mean = 0.0;
  double likelihood_se = 0.0;
  Eigen::VectorXd dyn_mse;  // per step; NaN where no trajectory reaches the step
  double coverage = 0.0;
  std::uint64_t seed = 0;
};

struct ComparisonInputs {
  std::vector<SourceData> sources;
  std::vector<TargetPolicy> policies;
  /// Offline dataset: fixes the likelihood units and the coverage reference.
  const Dataset* behavior = nullptr;
  const PointMass2D* oracle = nullptr;
  Index window = 16;
  std::uint64_t seed = 0;
};

/// Likelihood, dynamics error and coverage for every source x policy. The
/// offline source holds real transitions, so its dynamics error is zero by
/// definition. Missing sources are skipped and reported in `notices`.
std::vector<ComparisonRow> compare_sources(const ComparisonInputs& in, std::vector<std::string>* notices = nullptr);

/// Columns: source, policy, lambda, likelihood_mean, likelihood_se,
/// dyn_mse_at_1..W, coverage, seed. Missing steps are left empty.
void write_comparison_csv(const std::filesystem::path& path, const std::vector<ComparisonRow>& rows, Index window);

}  // namespace trajforge::analysis
