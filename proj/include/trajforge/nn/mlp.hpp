#pragma once

#include <vector>

#include "trajforge/nn/layers.hpp"

namespace trajforge::nn {

enum class OutputActivation { none, tanh };

/// Feed-forward network with SiLU hidden activations.
class Mlp {
 public:
  Mlp() = default;
  /// `widths` = {in, hidden..., out}.
  Mlp(std::vector<Index> widths, Rng& rng, OutputActivation out = OutputActivation::none, bool zero_last = false);

  /// Stateless evaluation; safe to call concurrently.
  Matrix infer(const Matrix& x) const;
  /// Evaluation that records what backward() needs.
  Matrix forward(const Matrix& x);
  /// Accumulates parameter gradients for the last forward(); returns dL/dx.
  Matrix backward(const Matrix& dy);

  ParamList params();
  const std::vector<Index>& widths() const { return widths_; }
  OutputActivation output_activation() const { return out_; }
  Index in() const { return widths_.front(); }
  Index out() const { return widths_.back(); }

  /// this <- (1 - rate) * this + rate * other (Polyak averaging).
  void soft_update_from(const Mlp& other, double rate);

 private:
  Matrix run(const Matrix& x, std::vector<Matrix>* tape) const;

  std::vector<Index> widths_;
  std::vector<Linear> layers_;
  OutputActivation out_ = OutputActivation::none;
  std::vector<Matrix> tape_;  // layer inputs (pre-activation of previous layer) and final output
  bool recorded_ = false;
};

}  // namespace trajforge::nn
