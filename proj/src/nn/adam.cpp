#include "trajforge/nn/adam.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "trajforge/core/error.hpp"

namespace trajforge::nn {

double cosine_lr(double lr0, double floor, std::int64_t step, std::int64_t total) {
  if (total <= 0) return lr0;
  const double frac = static_cast<double>(std::min(step, total)) / static_cast<double>(total);
  return floor + 0.5 * (lr0 - floor) * (1.0 + std::cos(std::numbers::pi * frac));
}

double Adam::current_lr() const { return cosine_lr(cfg_.lr, cfg_.lr_floor, t_, cfg_.cosine_steps); }

bool Adam::step(const ParamList& params) {
  if (m_.empty()) {
    for (const Param* p : params) {
      m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (m_.size() != params.size()) throw InvalidArgument("Adam::step: parameter list changed between steps");

  double sq = 0.0;
  for (const Param* p : params) {
    if (!p->grad.allFinite()) {
      ++anomalies_;
      zero_grads(params);
      return false;
    }
    sq += p->grad.squaredNorm();
  }
  const double scale = cfg_.grad_clip > 0.0 && std::sqrt(sq) > cfg_.grad_clip ? cfg_.grad_clip / std::sqrt(sq) : 1.0;

  const double lr = current_lr();
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param& p = *params[i];
    if (m_[i].rows() != p.value.rows() || m_[i].cols() != p.value.cols())
      throw InvalidArgument("Adam::step: parameter shape changed: " + p.name);
    const Matrix g = p.grad * scale;
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
    if (cfg_.weight_decay > 0.0) p.value *= 1.0 - lr * cfg_.weight_decay;
    p.value.array() -= lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + cfg_.eps);
    p.grad.setZero();
  }
  return true;
}

}  // namespace trajforge::nn
