#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "trajforge/core/random.hpp"

namespace trajforge::nn {

using Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// A trainable tensor and its accumulated gradient.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;

  Param() = default;
  Param(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}
};

using ParamList = std::vector<Param*>;

void zero_grads(const ParamList& params);
Index parameter_count(const ParamList& params);

// Activations are column batches: (features x batch) for dense layers and
// (channels x batch*length) for convolutions, positions of one sample being
// contiguous columns.

Matrix silu(const Matrix& x);
/// d/dx silu evaluated at x, multiplied by dy.
Matrix silu_backward(const Matrix& x, const Matrix& dy);

class Linear {
 public:
  Linear() = default;
  /// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); `zero_init` zeroes both weight and bias.
  Linear(Index in, Index out, Rng& rng, bool zero_init = false, std::string name = "linear");

  Matrix forward(const Matrix& x) const;
  /// Accumulates parameter gradients, returns dL/dx.
  Matrix backward(const Matrix& x, const Matrix& dy);
  void collect(ParamList& out);

  Index in() const { return weight_.value.cols(); }
  Index out() const { return weight_.value.rows(); }
  Param& weight() { return weight_; }
  Param& bias() { return bias_; }
  const Param& weight() const { return weight_; }
  const Param& bias() const { return bias_; }

 private:
  Param weight_;
  Param bias_;
};

/// Same-length 1-D convolution with zero padding and odd kernel size.
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(Index in, Index out, Index kernel, Rng& rng, bool zero_init = false, std::string name = "conv");

  Matrix forward(const Matrix& x, Index length) const;
  Matrix backward(const Matrix& x, const Matrix& dy, Index length);
  void collect(ParamList& out);

  Index in() const { return in_; }
  Index out() const { return weight_.value.rows(); }
  Index kernel() const { return kernel_; }

 private:
  Matrix im2col(const Matrix& x, Index length) const;
  Matrix col2im(const Matrix& cols, Index length) const;

  Index in_ = 0;
  Index kernel_ = 3;
  Param weight_;  // out x (kernel * in); tap k multiplies position t + k - kernel/2
  Param bias_;
};

/// Mean of adjacent position pairs: (C x B*L) -> (C x B*L/2).
Matrix avg_pool2(const Matrix& x);
Matrix avg_pool2_backward(const Matrix& dy);
/// Nearest-neighbour repeat: (C x B*L) -> (C x B*2L).
Matrix upsample2(const Matrix& x);
Matrix upsample2_backward(const Matrix& dy);

}  // namespace trajforge::nn
