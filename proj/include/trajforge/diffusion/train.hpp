#pragma once

#include <cstdint>
#include <vector>

#include "trajforge/core/trajectory.hpp"
#include "trajforge/diffusion/denoiser.hpp"
#include "trajforge/diffusion/layout.hpp"
#include "trajforge/nn/adam.hpp"

namespace trajforge::diffusion {

struct DenoiserTrainConfig {
  int epochs = 250;
  int batch = 16;
  /// Stops early after this many optimizer steps when positive.
  std::int64_t max_steps = 0;
  double lr = 2e-3;
  double p_mean = -1.2;
  double p_std = 1.2;
  std::uint64_t seed = 0;
};

struct DenoiserTrainResult {
  std::vector<double> losses;  // one per optimizer step
  std::int64_t steps = 0;
  std::int64_t anomalies = 0;
};

/// Trains on pre-encoded tensors (channels x W each) with per-column masks.
DenoiserTrainResult train_denoiser(EdmDenoiser& model, const std::vector<Eigen::MatrixXd>& tensors,
                                   const std::vector<Eigen::RowVectorXd>& masks, const DenoiserTrainConfig& cfg);

/// Encodes a normalized dataset and trains a fresh denoiser on it.
EdmDenoiser train_denoiser(const Dataset& dataset, nn::UNetConfig net, const DenoiserTrainConfig& cfg,
                           DenoiserTrainResult* result = nullptr);

}  // namespace trajforge::diffusion
