#pragma once

#include <cstdint>
#include <vector>

#include "trajforge/nn/layers.hpp"

namespace trajforge::nn {

struct AdamConfig {
  double lr = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  /// Cosine decay to `lr_floor` over this many steps; 0 keeps lr constant.
  std::int64_t cosine_steps = 0;
  double lr_floor = 0.0;
  /// Global gradient-norm clip; 0 disables.
  double grad_clip = 0.0;
};

/// Adam with optional cosine learning-rate decay. Moment buffers are keyed by
/// position in the ParamList, so callers pass the same list layout every step.
class Adam {
 public:
  Adam() = default;
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  /// Applies one update and zeroes the gradients. Returns false (and skips the
  /// update) when any gradient is non-finite.
  bool step(const ParamList& params);

  double current_lr() const;
  std::int64_t steps() const { return t_; }
  std::int64_t anomalies() const { return anomalies_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::vector<Matrix> m_, v_;
  std::int64_t t_ = 0;
  std::int64_t anomalies_ = 0;
};

double cosine_lr(double lr0, double floor, std::int64_t step, std::int64_t total);

}  // namespace trajforge::nn
