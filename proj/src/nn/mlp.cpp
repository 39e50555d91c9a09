#include "trajforge/nn/mlp.hpp"

#include "trajforge/core/error.hpp"

namespace trajforge::nn {

Mlp::Mlp(std::vector<Index> widths, Rng& rng, OutputActivation out, bool zero_last)
    : widths_(std::move(widths)), out_(out) {
  if (widths_.size() < 2) throw InvalidArgument("Mlp: need at least input and output widths");
  for (std::size_t i = 0; i + 1 < widths_.size(); ++i) {
    const bool last = i + 2 == widths_.size();
    layers_.emplace_back(widths_[i], widths_[i + 1], rng, last && zero_last, "mlp" + std::to_string(i));
  }
}

// Tape layout: tape[0] = x, tape[i] = pre-activation output of layer i-1,
// tape[n] = network output (post output activation).
Matrix Mlp::run(const Matrix& x, std::vector<Matrix>* tape) const {
  if (tape) tape->assign(1, x);
  Matrix h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Matrix z = layers_[i].forward(i == 0 ? h : silu(h));
    if (tape) tape->push_back(z);
    h = std::move(z);
  }
  if (out_ == OutputActivation::tanh) h = h.array().tanh();
  if (tape) tape->push_back(h);
  return h;
}

Matrix Mlp::infer(const Matrix& x) const { return run(x, nullptr); }

Matrix Mlp::forward(const Matrix& x) {
  Matrix y = run(x, &tape_);
  recorded_ = true;
  return y;
}

Matrix Mlp::backward(const Matrix& dy) {
  if (!recorded_) throw InvalidState("Mlp::backward called without a recorded forward pass");
  const std::size_t n = layers_.size();
  Matrix g = dy;
  if (out_ == OutputActivation::tanh) g = g.array() * (1.0 - tape_[n + 1].array().square());
  for (std::size_t i = n; i-- > 0;) {
    const Matrix input = i == 0 ? tape_[0] : silu(tape_[i]);
    g = layers_[i].backward(input, g);
    if (i > 0) g = silu_backward(tape_[i], g);
  }
  return g;
}

ParamList Mlp::params() {
  ParamList out;
  for (auto& l : layers_) l.collect(out);
  return out;
}

void Mlp::soft_update_from(const Mlp& other, double rate) {
  if (other.widths_ != widths_) throw InvalidArgument("Mlp::soft_update_from: architecture mismatch");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto& w = layers_[i].weight().value;
    auto& b = layers_[i].bias().value;
    w = (1.0 - rate) * w + rate * other.layers_[i].weight().value;
    b = (1.0 - rate) * b + rate * other.layers_[i].bias().value;
  }
}

}  // namespace trajforge::nn
