#include "trajforge/analysis/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "trajforge/core/error.hpp"

namespace trajforge::analysis {

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  a.n = values.size();
  if (a.n == 0) return a;
  for (double v : values) a.mean += v;
  a.mean /= static_cast<double>(a.n);
  if (a.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.se = std::sqrt(ss / static_cast<double>(a.n - 1) / static_cast<double>(a.n));
  }
  return a;
}

LikelihoodResult trajectory_likelihood(const Policy& policy, const Dataset& d) {
  if (policy.state_dim() != d.state_dim || policy.action_dim() != d.action_dim)
    throw InvalidArgument("trajectory_likelihood: policy and dataset dimensions differ");
  LikelihoodResult r;
  for (const auto& t : d.trajectories) {
    const Index len = t.valid_length();
    if (len == 0) continue;
    r.per_trajectory.push_back(log_prob_batch(policy, t.states.leftCols(len), t.actions.leftCols(len)).mean());
  }
  r.aggregate = aggregate(r.per_trajectory);
  return r;
}

LikelihoodResult trajectory_likelihood_normalized(std::shared_ptr<const Policy> policy, const Dataset& d,
                                                  const NormStats& stats) {
  Dataset raw = d.normalized ? denormalize(d) : d;
  raw.norm_stats = stats;
  raw.normalized = false;
  const NormalizedPolicyView view(std::move(policy), stats);
  return trajectory_likelihood(view, normalize(std::move(raw)));
}

DynamicsError dynamics_error(const PointMass2D& oracle, const Dataset& d) {
  if (d.state_dim != oracle.state_dim() || d.action_dim != oracle.action_dim())
    throw InvalidArgument("dynamics_error: dataset and environment dimensions differ");
  const Dataset raw = d.normalized ? denormalize(d) : d;
  const Index w = raw.window;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(w), sq = Eigen::VectorXd::Zero(w);
  std::vector<std::size_t> counts(static_cast<std::size_t>(w), 0);
  for (const auto& t : raw.trajectories) {
    const Index len = t.valid_length();
    if (len == 0) continue;
    const Eigen::MatrixXd truth = replay_actions(oracle, t.states.col(0), t.actions.leftCols(len));
    for (Index j = 0; j < len; ++j) {
      const double e = (t.states.col(j + 1) - truth.col(j + 1)).squaredNorm() / static_cast<double>(raw.state_dim);
      sum[j] += e;
      sq[j] += e * e;
      ++counts[static_cast<std::size_t>(j)];
    }
  }
  DynamicsError r;
  r.mse.resize(w);
  r.se.resize(w);
  r.counts = counts;
  for (Index j = 0; j < w; ++j) {
    const auto n = static_cast<double>(counts[static_cast<std::size_t>(j)]);
    if (n == 0) {
      r.mse[j] = r.se[j] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    r.mse[j] = sum[j] / n;
    r.se[j] = n > 1 ? std::sqrt(std::max(0.0, (sq[j] - n * r.mse[j] * r.mse[j]) / (n - 1)) / n) : 0.0;
  }
  return r;
}

CoverageGrid::CoverageGrid(int cells) : n_(cells), cells_(static_cast<std::size_t>(cells * cells), 0) {
  if (cells < 1) throw InvalidArgument("CoverageGrid: need at least one cell");
}

void CoverageGrid::add(const Dataset& d) {
  if (d.state_dim < 2) throw InvalidArgument("CoverageGrid: states need two position coordinates");
  const Dataset raw = d.normalized ? denormalize(d) : d;
  auto cell = [&](double x) {
    const int i = static_cast<int>(std::floor((x + 1.0) * 0.5 * n_));
    return std::clamp(i, 0, n_ - 1);
  };
  for (const auto& t : raw.trajectories) {
    const Index len = t.valid_length();
    for (Index c = 0; c <= len; ++c) {
      const double x = t.states(0, c), y = t.states(1, c);
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      cells_[static_cast<std::size_t>(cell(x) * n_ + cell(y))] = 1;
    }
  }
}

void CoverageGrid::merge(const CoverageGrid& other) {
  if (other.n_ != n_) throw InvalidArgument("CoverageGrid::merge: grid sizes differ");
  for (std::size_t i = 0; i < cells_.size(); ++i) cells_[i] |= other.cells_[i];
}

std::size_t CoverageGrid::occupied() const {
  std::size_t n = 0;
  for (auto c : cells_) n += c;
  return n;
}

double CoverageGrid::beyond(const CoverageGrid& reference) const {
  if (reference.n_ != n_) throw InvalidArgument("CoverageGrid::beyond: grid sizes differ");
  std::size_t n = 0;
  for (std::size_t i = 0; i < cells_.size(); ++i) n += cells_[i] && !reference.cells_[i];
  return static_cast<double>(n) / static_cast<double>(cells_.size());
}

double coverage_beyond(const Dataset& d, const Dataset& behavior, int cells) {
  CoverageGrid g(cells), ref(cells);
  g.add(d);
  ref.add(behavior);
  return g.beyond(ref);
}

}  // namespace trajforge::analysis
