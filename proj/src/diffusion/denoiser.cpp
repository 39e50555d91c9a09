#include "trajforge/diffusion/denoiser.hpp"

#include <cmath>

#include "trajforge/core/container.hpp"
#include "trajforge/core/error.hpp"
#include "trajforge/nn/checkpoint.hpp"

namespace trajforge::diffusion {

Preconditioning precondition(double sigma, double sigma_data) {
  if (sigma < 0.0) throw InvalidArgument("precondition: sigma must be non-negative");
  const double sd2 = sigma_data * sigma_data;
  const double total = sigma * sigma + sd2;
  Preconditioning p{};
  p.c_skip = sd2 / total;
  p.c_out = sigma * sigma_data / std::sqrt(total);
  p.c_in = 1.0 / std::sqrt(total);
  p.c_noise = sigma > 0.0 ? 0.25 * std::log(sigma) : 0.0;
  return p;
}

double loss_weight(double sigma, double sigma_data) {
  return (sigma * sigma + sigma_data * sigma_data) / ((sigma * sigma_data) * (sigma * sigma_data));
}

namespace {

void check_batch(const Eigen::MatrixXd& x, const Eigen::VectorXd& sigma, Index length, Index channels) {
  if (x.rows() != channels) throw InvalidArgument("denoiser: channel count mismatch");
  if (length <= 0 || x.cols() != sigma.size() * length)
    throw InvalidArgument("denoiser: columns must equal batch * length");
}

}  // namespace

EdmDenoiser::EdmDenoiser(nn::UNetConfig cfg, Rng& rng, double sigma_data) : net_(cfg, rng), sigma_data_(sigma_data) {
  if (!(sigma_data > 0.0)) throw InvalidArgument("EdmDenoiser: sigma_data must be positive");
}

Eigen::MatrixXd EdmDenoiser::denoise(const Eigen::MatrixXd& x, const Eigen::VectorXd& sigma, Index length) const {
  check_batch(x, sigma, length, channels());
  const Index batch = sigma.size();
  Eigen::MatrixXd scaled(x.rows(), x.cols());
  Eigen::VectorXd cond(batch);
  std::vector<Preconditioning> pre(static_cast<std::size_t>(batch));
  for (Index b = 0; b < batch; ++b) {
    pre[static_cast<std::size_t>(b)] = precondition(sigma[b], sigma_data_);
    scaled.middleCols(b * length, length) = pre[static_cast<std::size_t>(b)].c_in * x.middleCols(b * length, length);
    cond[b] = pre[static_cast<std::size_t>(b)].c_noise;
  }
  Eigen::MatrixXd out = net_.infer(scaled, cond, length);
  for (Index b = 0; b < batch; ++b) {
    const auto& p = pre[static_cast<std::size_t>(b)];
    out.middleCols(b * length, length) =
        p.c_skip * x.middleCols(b * length, length) + p.c_out * out.middleCols(b * length, length);
  }
  return out;
}

double EdmDenoiser::loss_and_grad(const Eigen::MatrixXd& clean, const Eigen::MatrixXd& noise,
                                  const Eigen::VectorXd& sigma, const Eigen::RowVectorXd& mask, Index length) {
  check_batch(clean, sigma, length, channels());
  if (noise.rows() != clean.rows() || noise.cols() != clean.cols() || mask.size() != clean.cols())
    throw InvalidArgument("EdmDenoiser::loss_and_grad: shape mismatch");
  const Index batch = sigma.size();
  const double count = mask.sum() * static_cast<double>(clean.rows());
  if (!(count > 0.0)) throw InvalidArgument("EdmDenoiser::loss_and_grad: mask selects nothing");

  Eigen::MatrixXd noisy(clean.rows(), clean.cols());
  Eigen::MatrixXd scaled(clean.rows(), clean.cols());
  Eigen::VectorXd cond(batch);
  std::vector<Preconditioning> pre(static_cast<std::size_t>(batch));
  for (Index b = 0; b < batch; ++b) {
    if (!(sigma[b] > 0.0)) throw InvalidArgument("EdmDenoiser::loss_and_grad: training sigma must be positive");
    const auto& p = pre[static_cast<std::size_t>(b)] = precondition(sigma[b], sigma_data_);
    noisy.middleCols(b * length, length) =
        clean.middleCols(b * length, length) + sigma[b] * noise.middleCols(b * length, length);
    scaled.middleCols(b * length, length) = p.c_in * noisy.middleCols(b * length, length);
    cond[b] = p.c_noise;
  }
  const Eigen::MatrixXd f = net_.forward(scaled, cond, length);

  double loss = 0.0;
  Eigen::MatrixXd df(f.rows(), f.cols());
  for (Index b = 0; b < batch; ++b) {
    const auto& p = pre[static_cast<std::size_t>(b)];
    const double w = loss_weight(sigma[b], sigma_data_);
    const Eigen::MatrixXd d = p.c_skip * noisy.middleCols(b * length, length) + p.c_out * f.middleCols(b * length, length);
    Eigen::MatrixXd r = d - clean.middleCols(b * length, length);
    r.array().rowwise() *= mask.segment(b * length, length).array();
    loss += w * r.squaredNorm();
    df.middleCols(b * length, length) = (2.0 * w * p.c_out / count) * r;
  }
  net_.backward(df);
  return loss / count;
}

void EdmDenoiser::save(const std::filesystem::path& path, const nlohmann::json& extra) {
  const auto& c = net_.config();
  nlohmann::json meta{{"arch", "unet1d"},         {"channels", c.channels}, {"width", c.width},
                      {"blocks", c.blocks},       {"kernel", c.kernel},     {"sigma_data", sigma_data_},
                      {"extra", extra}};
  nn::save_params(path, params(), meta);
}

EdmDenoiser EdmDenoiser::load(const std::filesystem::path& path) {
  const nlohmann::json meta = nn::read_checkpoint_meta(path);
  if (meta.value("arch", "") != "unet1d") throw LoadError(LoadErrorKind::malformed_header, "not a unet1d checkpoint");
  nn::UNetConfig cfg;
  cfg.channels = meta.at("channels").get<Index>();
  cfg.width = meta.at("width").get<Index>();
  cfg.blocks = meta.at("blocks").get<int>();
  cfg.kernel = meta.at("kernel").get<Index>();
  Rng rng(0);
  EdmDenoiser d(cfg, rng, meta.value("sigma_data", 1.0));
  nn::load_params(path, d.params());
  return d;
}

GaussianDenoiser::GaussianDenoiser(Eigen::VectorXd mean, Eigen::VectorXd std)
    : mean_(std::move(mean)), var_(std.array().square()) {
  if (mean_.size() != var_.size() || (std.array() <= 0.0).any())
    throw InvalidArgument("GaussianDenoiser: need one positive std per channel");
}

Eigen::MatrixXd GaussianDenoiser::denoise(const Eigen::MatrixXd& x, const Eigen::VectorXd& sigma, Index length) const {
  check_batch(x, sigma, length, channels());
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Index b = 0; b < sigma.size(); ++b) {
    const double s2 = sigma[b] * sigma[b];
    for (Index c = 0; c < x.rows(); ++c) {
      const double denom = var_[c] + s2;
      for (Index j = b * length; j < (b + 1) * length; ++j) out(c, j) = (var_[c] * x(c, j) + s2 * mean_[c]) / denom;
    }
  }
  return out;
}

Eigen::MatrixXd score(const Denoiser& d, const Eigen::MatrixXd& x, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("score: sigma must be positive");
  const Eigen::MatrixXd den = d.denoise(x, Eigen::VectorXd::Constant(1, sigma), x.cols());
  return (den - x) / (sigma * sigma);
}

}  // namespace trajforge::diffusion
