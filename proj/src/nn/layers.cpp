#include "trajforge/nn/layers.hpp"

#include <cmath>

#include "trajforge/core/error.hpp"

namespace trajforge::nn {

void zero_grads(const ParamList& params) {
  for (Param* p : params) p->grad.setZero();
}

Index parameter_count(const ParamList& params) {
  Index n = 0;
  for (const Param* p : params) n += p->value.size();
  return n;
}

Matrix silu(const Matrix& x) { return x.array() / (1.0 + (-x.array()).exp()); }

Matrix silu_backward(const Matrix& x, const Matrix& dy) {
  const Eigen::ArrayXXd s = 1.0 / (1.0 + (-x.array()).exp());
  return dy.array() * s * (1.0 + x.array() * (1.0 - s));
}

namespace {

Matrix uniform_init(Index rows, Index cols, Index fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(-bound, bound);
  return m;
}

}  // namespace

Linear::Linear(Index in, Index out, Rng& rng, bool zero_init, std::string name)
    : weight_(name + ".w", zero_init ? Matrix::Zero(out, in) : uniform_init(out, in, in, rng)),
      bias_(name + ".b", Matrix::Zero(out, 1)) {}

Matrix Linear::forward(const Matrix& x) const {
  if (x.rows() != in()) throw InvalidArgument("Linear: input has " + std::to_string(x.rows()) + " rows, expected " +
                                              std::to_string(in()));
  Matrix y = weight_.value * x;
  y.colwise() += bias_.value.col(0);
  return y;
}

Matrix Linear::backward(const Matrix& x, const Matrix& dy) {
  weight_.grad.noalias() += dy * x.transpose();
  bias_.grad.col(0) += dy.rowwise().sum();
  return weight_.value.transpose() * dy;
}

void Linear::collect(ParamList& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

Conv1d::Conv1d(Index in, Index out, Index kernel, Rng& rng, bool zero_init, std::string name)
    : in_(in),
      kernel_(kernel),
      weight_(name + ".w", zero_init ? Matrix::Zero(out, kernel * in) : uniform_init(out, kernel * in, kernel * in, rng)),
      bias_(name + ".b", Matrix::Zero(out, 1)) {
  if (kernel % 2 == 0) throw InvalidArgument("Conv1d: kernel size must be odd");
}

Matrix Conv1d::im2col(const Matrix& x, Index length) const {
  const Index n = x.cols();
  const Index half = kernel_ / 2;
  Matrix cols = Matrix::Zero(kernel_ * in_, n);
  for (Index j = 0; j < n; ++j) {
    const Index t = j % length;
    for (Index k = 0; k < kernel_; ++k) {
      const Index src = t + k - half;
      if (src < 0 || src >= length) continue;
      cols.block(k * in_, j, in_, 1) = x.col(j + k - half);
    }
  }
  return cols;
}

Matrix Conv1d::col2im(const Matrix& cols, Index length) const {
  const Index n = cols.cols();
  const Index half = kernel_ / 2;
  Matrix dx = Matrix::Zero(in_, n);
  for (Index j = 0; j < n; ++j) {
    const Index t = j % length;
    for (Index k = 0; k < kernel_; ++k) {
      const Index src = t + k - half;
      if (src < 0 || src >= length) continue;
      dx.col(j + k - half) += cols.block(k * in_, j, in_, 1);
    }
  }
  return dx;
}

Matrix Conv1d::forward(const Matrix& x, Index length) const {
  if (x.rows() != in_) throw InvalidArgument("Conv1d: input has " + std::to_string(x.rows()) + " channels, expected " +
                                             std::to_string(in_));
  if (length <= 0 || x.cols() % length != 0) throw InvalidArgument("Conv1d: columns not a multiple of length");
  Matrix y = weight_.value * im2col(x, length);
  y.colwise() += bias_.value.col(0);
  return y;
}

Matrix Conv1d::backward(const Matrix& x, const Matrix& dy, Index length) {
  const Matrix cols = im2col(x, length);
  weight_.grad.noalias() += dy * cols.transpose();
  bias_.grad.col(0) += dy.rowwise().sum();
  return col2im(weight_.value.transpose() * dy, length);
}

void Conv1d::collect(ParamList& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

Matrix avg_pool2(const Matrix& x) {
  if (x.cols() % 2 != 0) throw InvalidArgument("avg_pool2: odd number of positions");
  Matrix y(x.rows(), x.cols() / 2);
  for (Index j = 0; j < y.cols(); ++j) y.col(j) = 0.5 * (x.col(2 * j) + x.col(2 * j + 1));
  return y;
}

Matrix avg_pool2_backward(const Matrix& dy) {
  Matrix dx(dy.rows(), dy.cols() * 2);
  for (Index j = 0; j < dy.cols(); ++j) {
    dx.col(2 * j) = 0.5 * dy.col(j);
    dx.col(2 * j + 1) = 0.5 * dy.col(j);
  }
  return dx;
}

Matrix upsample2(const Matrix& x) {
  Matrix y(x.rows(), x.cols() * 2);
  for (Index j = 0; j < x.cols(); ++j) {
    y.col(2 * j) = x.col(j);
    y.col(2 * j + 1) = x.col(j);
  }
  return y;
}

Matrix upsample2_backward(const Matrix& dy) {
  Matrix dx(dy.rows(), dy.cols() / 2);
  for (Index j = 0; j < dx.cols(); ++j) dx.col(j) = dy.col(2 * j) + dy.col(2 * j + 1);
  return dx;
}

}  // namespace trajforge::nn
