#pragma once

#include <vector>

namespace trajforge::diffusion {

/// Karras noise levels with stochastic churn.
struct NoiseSchedule {
  int steps = 256;
  double sigma_max = 80.0;
  double sigma_min = 0.002;
  double rho = 7.0;
  double s_churn = 80.0;
  double s_noise = 1.003;
  double s_tmin = 0.05;
  double s_tmax = 50.0;

  /// sigma_0..sigma_N with sigma_N = 0.
  std::vector<double> sigmas() const;
  double sigma(int n) const;
  double gamma(int n) const;
  void validate() const;
};

struct GuidanceConfig {
  double lambda = 1.0;
  double beta = 0.3;
  /// Use sigma_N = 0 in the cosine term instead of the last nonzero level.
  bool literal_final_sigma = false;
};

/// lambda_n = lambda * (sigma_n + beta * sigma_last * sin(pi n / N)).
double guidance_schedule(const GuidanceConfig& g, const NoiseSchedule& sched, int n);
double guidance_weight(double lambda, double beta, double sigma_n, double sigma_last, int n, int steps);

}  // namespace trajforge::diffusion
