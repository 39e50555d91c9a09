#include "trajforge/oracle/tabular.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "trajforge/core/error.hpp"

namespace trajforge::oracle {

std::string describe(const TabTrajectory& t) {
  std::ostringstream out;
  for (std::size_t i = 0; i < t.size(); ++i) out << (i ? (i % 2 ? " a" : " s") : "s") << t[i];
  return out.str();
}

std::vector<TabTrajectory> enumerate_trajectories(const TabularMDP& mdp, int h) {
  if (h < 1) throw InvalidArgument("enumerate: horizon must be >= 1");
  const double size = std::pow(static_cast<double>(mdp.n_states) * mdp.n_actions, h) * mdp.n_states;
  if (size >= kEnumerationLimit) {
    std::ostringstream msg;
    msg << std::fixed << std::setprecision(0) << "enumerate: trajectory space holds " << size << " trajectories, limit is " << kEnumerationLimit;
    throw InvalidArgument(msg.str());
  }
  const std::size_t len = static_cast<std::size_t>(2 * h + 1);
  std::vector<TabTrajectory> out;
  out.reserve(static_cast<std::size_t>(size));
  TabTrajectory cur(len, 0);
  for (;;) {
    out.push_back(cur);
    // Odometer increment, last element fastest.
    std::size_t i = len;
    while (i-- > 0) {
      const int base = i % 2 ? mdp.n_actions : mdp.n_states;
      if (++cur[i] < base) break;
      cur[i] = 0;
      if (i == 0) return out;
    }
  }
}

double action_product(const TabularPolicy& pi, const TabTrajectory& t) {
  double q = 1.0;
  for (std::size_t i = 1; i < t.size(); i += 2) q *= pi(t[i - 1], t[i]);
  return q;
}

double trajectory_probability(const TabularMDP& mdp, const TabularPolicy& pi, const TabTrajectory& t) {
  double p = mdp.initial[static_cast<std::size_t>(t[0])];
  for (std::size_t i = 1; i < t.size(); i += 2) p *= pi(t[i - 1], t[i]) * mdp.T(t[i - 1], t[i], t[i + 1]);
  return p;
}

Distribution enumerate_distribution(const TabularMDP& mdp, const TabularPolicy& pi, int h) {
  pi.validate();
  Distribution d;
  for (auto& t : enumerate_trajectories(mdp, h)) {
    const double p = trajectory_probability(mdp, pi, t);
    if (p > 0.0) {
      d.trajectories.push_back(std::move(t));
      d.probs.push_back(p);
    }
  }
  return d;
}

double check_importance_identity(const TabularMDP& mdp, const TabularPolicy& off, const TabularPolicy& target, int h) {
  std::vector<TabTrajectory> flagged;
  double worst = 0.0;
  for (const auto& t : enumerate_trajectories(mdp, h)) {
    const double pt = trajectory_probability(mdp, target, t);
    double w = 1.0;
    bool violated = false;
    for (std::size_t i = 1; i < t.size(); i += 2) {
      const double po = off(t[i - 1], t[i]), ptg = target(t[i - 1], t[i]);
      if (po == 0.0) {
        if (ptg > 0.0) violated = true;
        w = 0.0;
      } else {
        w *= ptg / po;
      }
    }
    if (violated) {
      if (pt > 0.0) flagged.push_back(t);
      continue;
    }
    worst = std::max(worst, std::abs(pt - trajectory_probability(mdp, off, t) * w));
  }
  if (!flagged.empty())
    throw SupportError("importance identity: behavior policy has zero probability where the target does not (" +
                           std::to_string(flagged.size()) + " trajectories)",
                       std::move(flagged));
  return worst;
}

TrajectoryTable build_table(const TabularMDP& mdp, const TabularPolicy& off, const TabularPolicy& target, int h,
                            const std::vector<double>& lambdas) {
  TrajectoryTable tab;
  for (auto& t : enumerate_trajectories(mdp, h)) {
    const double po = trajectory_probability(mdp, off, t), pt = trajectory_probability(mdp, target, t);
    if (po <= 0.0 && pt <= 0.0) continue;
    tab.p_off.push_back(po);
    tab.p_target.push_back(pt);
    tab.q_off.push_back(action_product(off, t));
    tab.q_target.push_back(action_product(target, t));
    tab.trajectories.push_back(std::move(t));
  }
  tab.lambdas = lambdas;
  for (double l : lambdas) tab.F.push_back(behavior_regularized(tab, l));
  return tab;
}

std::vector<double> behavior_regularized(const TrajectoryTable& table, double lambda) {
  std::vector<double> f(table.size());
  double z = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    // q^0 is 1 even where q vanishes, so lambda = 0 reproduces p_off exactly.
    f[i] = lambda == 0.0 ? table.p_off[i] : table.p_off[i] * std::pow(table.q_target[i], lambda);
    z += f[i];
  }
  if (!(z > 0.0)) throw InvalidArgument("behavior_regularized: every weight is zero (degenerate distribution)");
  if (lambda == 0.0) return f;
  for (double& v : f) v /= z;
  return f;
}

double symmetry_error(const TrajectoryTable& table) {
  double worst = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i)
    worst = std::max(worst, std::abs(table.p_off[i] * table.q_target[i] - table.p_target[i] * table.q_off[i]));
  return worst;
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw InvalidArgument("total_variation: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

void write_table_csv(const std::filesystem::path& path, const TrajectoryTable& table) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write oracle table " + path.string());
  out << "tau_index,trajectory,p_off,p_target,q_off,q_target";
  for (double l : table.lambdas) out << ",F_lambda_" << l;
  out << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << i << ',' << describe(table.trajectories[i]) << ',' << table.p_off[i] << ',' << table.p_target[i] << ','
        << table.q_off[i] << ',' << table.q_target[i];
    for (const auto& f : table.F) out << ',' << f[i];
    out << '\n';
  }
}

TabularPolicy default_behavior_policy() {
  TabularPolicy p{3, 2, {0.8, 0.2, 0.7, 0.3, 0.6, 0.4}};
  return p;
}

TabularPolicy default_target_policy() {
  TabularPolicy p{3, 2, {0.2, 0.8, 0.1, 0.9, 0.3, 0.7}};
  return p;
}

namespace {

double normal_pdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

// Density of the noised embedding at x, over the coordinates in `use`.
double noised_density(const Distribution& d, double sigma, const std::vector<double>& x, const std::vector<bool>& use) {
  double total = 0.0;
  for (std::size_t k = 0; k < d.trajectories.size(); ++k) {
    double p = d.probs[k];
    for (std::size_t i = 0; i < x.size(); ++i)
      if (use[i]) p *= normal_pdf(x[i], d.trajectories[k][i], sigma);
    total += p;
  }
  return total;
}

}  // namespace

ConditionalPair noised_action_conditionals(const TabularMDP& mdp, const TabularPolicy& pi, double sigma,
                                           const std::vector<double>& point) {
  if (sigma <= 0.0) throw InvalidArgument("noised_action_conditionals: sigma must be positive");
  if (point.size() != 3) throw InvalidArgument("noised_action_conditionals: point must be (s0, a0, s1)");
  const Distribution d = enumerate_distribution(mdp, pi, 1);
  ConditionalPair c;
  c.given_all = noised_density(d, sigma, point, {true, true, true}) / noised_density(d, sigma, point, {true, false, true});
  c.given_state = noised_density(d, sigma, point, {true, true, false}) / noised_density(d, sigma, point, {true, false, false});
  return c;
}

double noised_factorization_gap(const TabularMDP& mdp, const TabularPolicy& off, const TabularPolicy& target, int h,
                                double sigma, const std::vector<double>& point) {
  if (point.size() != static_cast<std::size_t>(2 * h + 1)) throw InvalidArgument("noised_factorization_gap: bad point size");
  TabTrajectory nearest(point.size());
  for (std::size_t i = 0; i < point.size(); ++i) nearest[i] = static_cast<int>(std::lround(point[i]));
  double log_w = 0.0;
  for (std::size_t i = 1; i < nearest.size(); i += 2)
    log_w += std::log(target(nearest[i - 1], nearest[i])) - std::log(off(nearest[i - 1], nearest[i]));
  if (sigma == 0.0)
    return std::abs(std::log(trajectory_probability(mdp, target, nearest)) -
                    std::log(trajectory_probability(mdp, off, nearest)) - log_w);
  const std::vector<bool> all(point.size(), true);
  const double pt = noised_density(enumerate_distribution(mdp, target, h), sigma, point, all);
  const double po = noised_density(enumerate_distribution(mdp, off, h), sigma, point, all);
  return std::abs(std::log(pt) - std::log(po) - log_w);
}

}  // namespace trajforge::oracle
