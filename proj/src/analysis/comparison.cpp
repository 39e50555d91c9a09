#include "trajforge/analysis/comparison.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "trajforge/core/error.hpp"

namespace trajforge::analysis {

std::vector<ComparisonRow> compare_sources(const ComparisonInputs& in, std::vector<std::string>* notices) {
  if (!in.behavior || !in.oracle) throw InvalidArgument("compare_sources: behavior dataset and oracle are required");
  if (!in.oracle->deterministic()) throw ConfigError("compare_sources: the oracle environment must be noise-free");
  const Dataset behavior_raw = in.behavior->normalized ? denormalize(*in.behavior) : *in.behavior;
  const NormStats units = behavior_raw.norm_stats ? *behavior_raw.norm_stats : compute_norm_stats(behavior_raw);
  CoverageGrid reference;
  reference.add(behavior_raw);

  std::vector<ComparisonRow> rows;
  for (const auto& pol : in.policies) {
    for (const auto& name : kSources) {
      std::vector<const SourceData*> found;
      for (const auto& s : in.sources)
        if (s.source == name && s.data && (s.policy.empty() || s.policy == pol.name)) found.push_back(&s);
      if (found.empty()) {
        if (notices) notices->push_back("no '" + name + "' data for policy '" + pol.name + "'; row skipped");
        continue;
      }
      for (const SourceData* s : found) {
        ComparisonRow row;
        row.source = name;
        row.policy = pol.name;
        row.lambda = s->lambda;
        row.seed = in.seed;
        const auto lik = trajectory_likelihood_normalized(pol.policy, *s->data, units);
        row.likelihood_mean = lik.aggregate.mean;
        row.likelihood_se = lik.aggregate.se;
        if (name == "offline") {
          row.dyn_mse = Eigen::VectorXd::Zero(in.window);
        } else {
          const DynamicsError de = dynamics_error(*in.oracle, *s->data);
          row.dyn_mse = Eigen::VectorXd::Constant(in.window, std::nan(""));
          const Index n = std::min<Index>(in.window, de.mse.size());
          row.dyn_mse.head(n) = de.mse.head(n);
        }
        CoverageGrid g;
        g.add(*s->data);
        row.coverage = g.beyond(reference);
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

void write_comparison_csv(const std::filesystem::path& path, const std::vector<ComparisonRow>& rows, Index window) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write comparison file " + path.string());
  out << "source,policy,lambda,likelihood_mean,likelihood_se";
  for (Index j = 1; j <= window; ++j) out << ",dyn_mse_at_" << j;
  out << ",coverage,seed\n" << std::setprecision(10);
  for (const auto& r : rows) {
    out << r.source << ',' << r.policy << ',' << r.lambda << ',' << r.likelihood_mean << ',' << r.likelihood_se;
    for (Index j = 0; j < window; ++j) {
      out << ',';
      if (j < r.dyn_mse.size() && std::isfinite(r.dyn_mse[j])) out << r.dyn_mse[j];
    }
    out << ',' << r.coverage << ',' << r.seed << '\n';
  }
}

}  // namespace trajforge::analysis
