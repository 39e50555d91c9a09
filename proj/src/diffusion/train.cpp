#include "trajforge/diffusion/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "trajforge/core/error.hpp"

namespace trajforge::diffusion {

DenoiserTrainResult train_denoiser(EdmDenoiser& model, const std::vector<Eigen::MatrixXd>& tensors,
                                   const std::vector<Eigen::RowVectorXd>& masks, const DenoiserTrainConfig& cfg) {
  if (tensors.empty()) throw InvalidArgument("train_denoiser: empty dataset");
  if (masks.size() != tensors.size()) throw InvalidArgument("train_denoiser: one mask per tensor required");
  if (cfg.batch < 1 || cfg.epochs < 1) throw InvalidArgument("train_denoiser: batch and epochs must be positive");
  const Index channels = tensors.front().rows();
  const Index length = tensors.front().cols();
  for (std::size_t i = 0; i < tensors.size(); ++i)
    if (tensors[i].rows() != channels || tensors[i].cols() != length || masks[i].size() != length)
      throw InvalidArgument("train_denoiser: tensors must share one shape");

  const auto n = tensors.size();
  const auto batch = static_cast<std::size_t>(cfg.batch);
  const std::int64_t per_epoch = static_cast<std::int64_t>((n + batch - 1) / batch);
  std::int64_t total = per_epoch * cfg.epochs;
  if (cfg.max_steps > 0) total = std::min(total, cfg.max_steps);

  nn::AdamConfig acfg;
  acfg.lr = cfg.lr;
  acfg.cosine_steps = total;
  nn::Adam opt(acfg);
  nn::ParamList params = model.params();
  nn::zero_grads(params);

  Rng rng(derive_seed(cfg.seed, "denoiser-train"));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  DenoiserTrainResult res;
  for (int epoch = 0; epoch < cfg.epochs && res.steps < total; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (std::size_t start = 0; start < n && res.steps < total; start += batch) {
      const std::size_t bs = std::min(batch, n - start);
      const Index cols = static_cast<Index>(bs) * length;
      Eigen::MatrixXd clean(channels, cols), noise(channels, cols);
      Eigen::RowVectorXd mask(cols);
      Eigen::VectorXd sigma(static_cast<Index>(bs));
      for (std::size_t k = 0; k < bs; ++k) {
        const auto b = static_cast<Index>(k);
        clean.middleCols(b * length, length) = tensors[order[start + k]];
        mask.segment(b * length, length) = masks[order[start + k]];
        sigma[b] = std::exp(cfg.p_mean + cfg.p_std * rng.normal());
        for (Index j = 0; j < length; ++j)
          for (Index c = 0; c < channels; ++c) noise(c, b * length + j) = rng.normal();
      }
      if (mask.sum() <= 0.0) continue;
      const double loss = model.loss_and_grad(clean, noise, sigma, mask, length);
      opt.step(params);
      res.losses.push_back(loss);
      ++res.steps;
    }
  }
  res.anomalies = opt.anomalies();
  return res;
}

EdmDenoiser train_denoiser(const Dataset& dataset, nn::UNetConfig net, const DenoiserTrainConfig& cfg,
                           DenoiserTrainResult* result) {
  if (dataset.empty()) throw InvalidArgument("train_denoiser: empty dataset");
  if (!dataset.normalized) throw InvalidArgument("train_denoiser: dataset must be normalized");
  const ChannelLayout layout{dataset.state_dim, dataset.action_dim};
  std::vector<Eigen::MatrixXd> tensors;
  std::vector<Eigen::RowVectorXd> masks;
  for (const auto& t : dataset.trajectories) {
    if (t.length() != dataset.window) throw InvalidArgument("train_denoiser: trajectory length differs from W");
    tensors.push_back(to_tensor(t, layout));
    masks.push_back(validity_mask(t));
  }
  net.channels = layout.channels();
  Rng init(derive_seed(cfg.seed, "denoiser-init"));
  EdmDenoiser model(net, init);
  DenoiserTrainResult r = train_denoiser(model, tensors, masks, cfg);
  if (result) *result = std::move(r);
  return model;
}

}  // namespace trajforge::diffusion
