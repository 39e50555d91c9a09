#include "trajforge/policies/behavior.hpp"

#include <cmath>

#include "trajforge/core/error.hpp"

namespace trajforge {

BehaviorLevel parse_behavior_level(const std::string& name) {
  if (name == "random") return BehaviorLevel::random;
  if (name == "medium") return BehaviorLevel::medium;
  if (name == "mixed") return BehaviorLevel::mixed;
  throw InvalidArgument("unknown behavior level '" + name + "' (expected random, medium or mixed)");
}

std::string to_string(BehaviorLevel level) {
  switch (level) {
    case BehaviorLevel::random: return "random";
    case BehaviorLevel::medium: return "medium";
    case BehaviorLevel::mixed: return "mixed";
  }
  return "?";
}

BehaviorPolicy::BehaviorPolicy(BehaviorLevel level, BehaviorConfig cfg) : level_(level) {
  const Eigen::Vector2d goal = cfg.goal;
  const double kp = cfg.kp, kd = cfg.kd;
  medium_ = std::make_shared<FunctionPolicy>(
      PointMass2D::kStateDim, PointMass2D::kActionDim,
      [goal, kp, kd](const Eigen::VectorXd& s) -> Eigen::VectorXd {
        return kp * (goal - s.head<2>()) - kd * s.tail<2>();
      },
      Eigen::VectorXd::Constant(PointMass2D::kActionDim, std::log(cfg.medium_std)));
  random_ = std::make_shared<FunctionPolicy>(
      PointMass2D::kStateDim, PointMass2D::kActionDim,
      [](const Eigen::VectorXd&) -> Eigen::VectorXd { return Eigen::VectorXd::Zero(PointMass2D::kActionDim); },
      Eigen::VectorXd::Constant(PointMass2D::kActionDim, std::log(cfg.random_std)));
}

const Policy& BehaviorPolicy::for_episode(Rng& rng, std::string* tag) const {
  bool use_medium = level_ == BehaviorLevel::medium;
  if (level_ == BehaviorLevel::mixed) use_medium = rng.bernoulli(0.5);
  if (tag) *tag = use_medium ? "medium" : "random";
  return use_medium ? *medium_ : *random_;
}

BehaviorPolicy scripted_behavior(const PointMass2D&, const std::string& level) {
  return BehaviorPolicy(parse_behavior_level(level));
}

std::vector<Trajectory> collect_episodes(const PointMass2D& env, const BehaviorPolicy& behavior, std::size_t episodes,
                                         std::uint64_t seed) {
  std::vector<Trajectory> out;
  out.reserve(episodes);
  for (std::size_t e = 0; e < episodes; ++e) {
    Rng rng(derive_seed(seed, "collect", e));
    const Policy& pi = behavior.for_episode(rng);
    const Eigen::VectorXd s0 = env.reset(rng);
    out.push_back(rollout(env, pi, s0, env.config().horizon, rng));
  }
  return out;
}

Dataset collect_dataset(const PointMass2D& env, const BehaviorPolicy& behavior, std::size_t episodes, Index w,
                        Index stride, std::uint64_t seed) {
  Dataset d;
  d.window = w;
  d.state_dim = env.state_dim();
  d.action_dim = env.action_dim();
  d.source_tag = to_string(behavior.level());
  for (const auto& ep : collect_episodes(env, behavior, episodes, seed))
    for (auto& t : window(ep, w, stride)) d.add(std::move(t));
  return d;
}

}  // namespace trajforge
