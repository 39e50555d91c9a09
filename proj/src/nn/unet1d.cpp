#include "trajforge/nn/unet1d.hpp"

#include "trajforge/core/error.hpp"

namespace trajforge::nn {

Matrix expand_per_position(const Vector& per_sample, Index length) {
  Matrix out(1, per_sample.size() * length);
  for (Index b = 0; b < per_sample.size(); ++b) out.block(0, b * length, 1, length).setConstant(per_sample[b]);
  return out;
}

ResBlock::ResBlock(Index in, Index out, Index kernel, Rng& rng, const std::string& name)
    : conv1_(in, out, kernel, rng, false, name + ".conv1"),
      conv2_(out, out, kernel, rng, false, name + ".conv2"),
      emb_scale_(name + ".emb_scale", Matrix::Zero(out, 1)),
      emb_shift_(name + ".emb_shift", Matrix::Zero(out, 1)),
      has_skip_(in != out) {
  for (Index i = 0; i < out; ++i) emb_scale_.value(i, 0) = rng.uniform(-1.0, 1.0);
  if (has_skip_) skip_ = Conv1d(in, out, 1, rng, false, name + ".skip");
}

Matrix ResBlock::forward(const Matrix& x, const Matrix& cond, Index length, Tape* tape) const {
  Matrix h1 = conv1_.forward(silu(x), length);
  h1 += emb_scale_.value.col(0) * cond;
  h1.colwise() += emb_shift_.value.col(0);
  Matrix out = conv2_.forward(silu(h1), length);
  out += has_skip_ ? skip_.forward(x, length) : x;
  if (tape) *tape = {x, std::move(h1), cond};
  return out;
}

Matrix ResBlock::backward(const Tape& tape, const Matrix& dy, Index length) {
  Matrix dh1 = silu_backward(tape.h1, conv2_.backward(silu(tape.h1), dy, length));
  emb_scale_.grad.col(0) += dh1 * tape.cond.transpose();
  emb_shift_.grad.col(0) += dh1.rowwise().sum();
  Matrix dx = silu_backward(tape.x, conv1_.backward(silu(tape.x), dh1, length));
  dx += has_skip_ ? skip_.backward(tape.x, dy, length) : dy;
  return dx;
}

void ResBlock::collect(ParamList& out) {
  conv1_.collect(out);
  conv2_.collect(out);
  out.push_back(&emb_scale_);
  out.push_back(&emb_shift_);
  if (has_skip_) skip_.collect(out);
}

UNet1d::UNet1d(UNetConfig cfg, Rng& rng) : cfg_(cfg) {
  if (cfg_.channels < 1 || cfg_.width < 1 || cfg_.blocks < 1) throw InvalidArgument("UNet1d: sizes must be positive");
  const Index f = cfg_.width;
  in_conv_ = Conv1d(cfg_.channels + 1, f, cfg_.kernel, rng, false, "in");
  for (int i = 0; i < cfg_.blocks; ++i) down_.emplace_back(f, f, cfg_.kernel, rng, "down" + std::to_string(i));
  mid_ = ResBlock(f, f, cfg_.kernel, rng, "mid");
  for (int i = 0; i < cfg_.blocks; ++i) up_.emplace_back(2 * f, f, cfg_.kernel, rng, "up" + std::to_string(i));
  out_conv_ = Conv1d(f, cfg_.channels, cfg_.kernel, rng, true, "out");
}

void UNet1d::check_input(const Matrix& x, const Vector& cond, Index length) const {
  if (x.rows() != cfg_.channels)
    throw InvalidArgument("UNet1d: input has " + std::to_string(x.rows()) + " channels, expected " +
                          std::to_string(cfg_.channels));
  const Index factor = Index{1} << (cfg_.blocks - 1);
  if (length <= 0 || length % factor != 0)
    throw InvalidArgument("UNet1d: length must be a positive multiple of " + std::to_string(factor));
  if (x.cols() != cond.size() * length) throw InvalidArgument("UNet1d: columns must equal samples * length");
}

Matrix UNet1d::run(const Matrix& x, const Vector& cond, Index length, Tape* tape) const {
  check_input(x, cond, length);
  const auto nb = static_cast<std::size_t>(cfg_.blocks);
  std::vector<Matrix> skips(nb);
  if (tape) {
    tape->length = length;
    tape->down.assign(nb, {});
    tape->up.assign(nb, {});
  }

  Matrix input(cfg_.channels + 1, x.cols());
  input.topRows(cfg_.channels) = x;
  input.bottomRows(1) = expand_per_position(cond, length);
  Matrix h = in_conv_.forward(input, length);
  if (tape) tape->input = std::move(input);

  Index len = length;
  for (std::size_t i = 0; i < nb; ++i) {
    h = down_[i].forward(h, expand_per_position(cond, len), len, tape ? &tape->down[i] : nullptr);
    skips[i] = h;
    if (i + 1 < nb) {
      h = avg_pool2(h);
      len /= 2;
    }
  }
  h = mid_.forward(h, expand_per_position(cond, len), len, tape ? &tape->mid : nullptr);
  for (std::size_t i = nb; i-- > 0;) {
    Matrix cat(2 * cfg_.width, h.cols());
    cat.topRows(cfg_.width) = h;
    cat.bottomRows(cfg_.width) = skips[i];
    h = up_[i].forward(cat, expand_per_position(cond, len), len, tape ? &tape->up[i] : nullptr);
    if (i > 0) {
      h = upsample2(h);
      len *= 2;
    }
  }
  Matrix out = out_conv_.forward(silu(h), length);
  if (tape) tape->pre_out = std::move(h);
  return out;
}

Matrix UNet1d::infer(const Matrix& x, const Vector& cond, Index length) const { return run(x, cond, length, nullptr); }

Matrix UNet1d::forward(const Matrix& x, const Vector& cond, Index length) {
  Matrix y = run(x, cond, length, &tape_);
  recorded_ = true;
  return y;
}

Matrix UNet1d::backward(const Matrix& dy) {
  if (!recorded_) throw InvalidState("UNet1d::backward called without a recorded forward pass");
  const auto nb = static_cast<std::size_t>(cfg_.blocks);
  const Index length = tape_.length;
  const Index f = cfg_.width;

  Matrix g = silu_backward(tape_.pre_out, out_conv_.backward(silu(tape_.pre_out), dy, length));
  std::vector<Matrix> dskips(nb);
  Index len = length;
  for (std::size_t i = 0; i < nb; ++i) {
    if (i > 0) {
      g = upsample2_backward(g);
      len /= 2;
    }
    Matrix dcat = up_[i].backward(tape_.up[i], g, len);
    dskips[i] = dcat.bottomRows(f);
    g = dcat.topRows(f);
  }
  g = mid_.backward(tape_.mid, g, len);
  for (std::size_t i = nb; i-- > 0;) {
    if (i + 1 < nb) {
      g = avg_pool2_backward(g);
      len *= 2;
    }
    g += dskips[i];
    g = down_[i].backward(tape_.down[i], g, len);
  }
  Matrix dinput = in_conv_.backward(tape_.input, g, length);
  return dinput.topRows(cfg_.channels);
}

ParamList UNet1d::params() {
  ParamList out;
  in_conv_.collect(out);
  for (auto& b : down_) b.collect(out);
  mid_.collect(out);
  for (auto& b : up_) b.collect(out);
  out_conv_.collect(out);
  return out;
}

}  // namespace trajforge::nn
