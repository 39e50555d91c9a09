#include "trajforge/diffusion/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "trajforge/core/error.hpp"

namespace trajforge::diffusion {

void NoiseSchedule::validate() const {
  if (steps < 2) throw InvalidArgument("NoiseSchedule: need at least 2 steps");
  if (!(sigma_min > 0.0) || !(sigma_max > sigma_min) || !(rho > 0.0))
    throw InvalidArgument("NoiseSchedule: require 0 < sigma_min < sigma_max and rho > 0");
  if (s_churn < 0.0 || s_noise < 0.0) throw InvalidArgument("NoiseSchedule: churn parameters must be non-negative");
}

double NoiseSchedule::sigma(int n) const {
  if (n < 0 || n > steps) throw InvalidArgument("NoiseSchedule::sigma: step out of range");
  if (n == steps) return 0.0;
  const double a = std::pow(sigma_max, 1.0 / rho);
  const double b = std::pow(sigma_min, 1.0 / rho);
  const double frac = static_cast<double>(n) / static_cast<double>(steps - 1);
  return std::pow(a + frac * (b - a), rho);
}

std::vector<double> NoiseSchedule::sigmas() const {
  validate();
  std::vector<double> out(static_cast<std::size_t>(steps) + 1);
  for (int n = 0; n <= steps; ++n) out[static_cast<std::size_t>(n)] = sigma(n);
  return out;
}

double NoiseSchedule::gamma(int n) const {
  const double s = sigma(n);
  if (s < s_tmin || s > s_tmax) return 0.0;
  return std::min(s_churn / static_cast<double>(steps), std::sqrt(2.0) - 1.0);
}

double guidance_weight(double lambda, double beta, double sigma_n, double sigma_last, int n, int steps) {
  const double phase = std::numbers::pi * static_cast<double>(n) / static_cast<double>(steps);
  return lambda * (sigma_n + beta * sigma_last * std::sin(phase));
}

double guidance_schedule(const GuidanceConfig& g, const NoiseSchedule& sched, int n) {
  const double last = g.literal_final_sigma ? 0.0 : sched.sigma(sched.steps - 1);
  return guidance_weight(g.lambda, g.beta, sched.sigma(n), last, n, sched.steps);
}

}  // namespace trajforge::diffusion
