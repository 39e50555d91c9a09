#pragma once

#include <memory>
#include <string>
#include <vector>

#include "trajforge/envs/point_mass.hpp"
#include "trajforge/policies/policy.hpp"

namespace trajforge {

enum class BehaviorLevel { random, medium, mixed };

BehaviorLevel parse_behavior_level(const std::string& name);
std::string to_string(BehaviorLevel level);

inline const Eigen::Vector2d kBehaviorGoal{0.5, 0.5};

struct BehaviorConfig {
  Eigen::Vector2d goal = kBehaviorGoal;
  double kp = 2.0;
  double kd = 2.5;
  double medium_std = 0.3;
  double random_std = 1.0;
};

/// Scripted data-collection policy. `mixed` picks medium or random once per
/// episode with equal probability.
class BehaviorPolicy {
 public:
  BehaviorPolicy(BehaviorLevel level, BehaviorConfig cfg = {});

  BehaviorLevel level() const { return level_; }
  /// Policy for one episode; `tag` receives "medium" or "random".
  const Policy& for_episode(Rng& rng, std::string* tag = nullptr) const;
  const Policy& medium() const { return *medium_; }
  const Policy& random() const { return *random_; }

 private:
  BehaviorLevel level_;
  std::shared_ptr<const Policy> medium_, random_;
};

BehaviorPolicy scripted_behavior(const PointMass2D& env, const std::string& level);

/// Full-horizon episodes; episode e uses the stream derive_seed(seed, "collect", e).
std::vector<Trajectory> collect_episodes(const PointMass2D& env, const BehaviorPolicy& behavior, std::size_t episodes,
                                         std::uint64_t seed);

/// Collects episodes and cuts them into windows. The result is in raw units
/// and tagged with the behavior level.
Dataset collect_dataset(const PointMass2D& env, const BehaviorPolicy& behavior, std::size_t episodes, Index window,
                        Index stride, std::uint64_t seed);

}  // namespace trajforge
