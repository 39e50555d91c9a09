#pragma once

#include <filesystem>
#include <memory>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "trajforge/nn/unet1d.hpp"

namespace trajforge::diffusion {

using Eigen::Index;

/// D(x; sigma) over a batch of trajectory tensors laid side by side:
/// x is channels x (B * length), sigma has B entries.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual Index channels() const = 0;
  virtual Eigen::MatrixXd denoise(const Eigen::MatrixXd& x, const Eigen::VectorXd& sigma, Index length) const = 0;
};

struct Preconditioning {
  double c_skip, c_out, c_in, c_noise;
};

/// Karras et al. preconditioning for data standard deviation `sigma_data`.
/// At sigma = 0 this gives c_skip = 1, c_out = 0.
Preconditioning precondition(double sigma, double sigma_data = 1.0);

/// Loss weight (sigma^2 + sigma_data^2) / (sigma sigma_data)^2.
double loss_weight(double sigma, double sigma_data = 1.0);

/// Learned denoiser D = c_skip x + c_out F(c_in x; c_noise) with a U-Net F.
class EdmDenoiser final : public Denoiser {
 public:
  EdmDenoiser(nn::UNetConfig cfg, Rng& rng, double sigma_data = 1.0);

  Index channels() const override { return net_.config().channels; }
  Eigen::MatrixXd denoise(const Eigen::MatrixXd& x, const Eigen::VectorXd& sigma, Index length) const override;

  /// One training evaluation: loss = mean over unmasked entries of
  /// w(sigma) (D(y + n; sigma) - y)^2. Accumulates parameter gradients.
  /// `mask` is 1 x (B * length).
  double loss_and_grad(const Eigen::MatrixXd& clean, const Eigen::MatrixXd& noise, const Eigen::VectorXd& sigma,
                       const Eigen::RowVectorXd& mask, Index length);

  nn::ParamList params() { return net_.params(); }
  nn::UNet1d& network() { return net_; }
  double sigma_data() const { return sigma_data_; }

  void save(const std::filesystem::path& path, const nlohmann::json& extra = {});
  static EdmDenoiser load(const std::filesystem::path& path);

 private:
  nn::UNet1d net_;
  double sigma_data_ = 1.0;
};

/// Closed-form optimal denoiser for data with independent N(mu_c, s_c^2)
/// entries per channel: D = (s^2 x + sigma^2 mu) / (s^2 + sigma^2).
class GaussianDenoiser final : public Denoiser {
 public:
  GaussianDenoiser(Eigen::VectorXd mean, Eigen::VectorXd std);

  Index channels() const override { return mean_.size(); }
  Eigen::MatrixXd denoise(const Eigen::MatrixXd& x, const Eigen::VectorXd& sigma, Index length) const override;

 private:
  Eigen::VectorXd mean_, var_;
};

/// Behavior score (D(x; sigma) - x) / sigma^2 for one trajectory tensor.
Eigen::MatrixXd score(const Denoiser& d, const Eigen::MatrixXd& x, double sigma);

}  // namespace trajforge::diffusion
