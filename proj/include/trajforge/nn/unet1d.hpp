#pragma once

#include <vector>

#include "trajforge/nn/layers.hpp"

namespace trajforge::nn {

struct UNetConfig {
  Index channels = 1;  // input and output channels
  Index width = 64;    // feature width at every resolution
  int blocks = 3;      // resolutions: L, L/2, ..., L/2^(blocks-1)
  Index kernel = 3;
};

/// Residual conv block: out = skip(x) + conv2(silu(conv1(silu(x)) + a*c + b)),
/// where c is the per-sample noise embedding and (a, b) are per-channel.
class ResBlock {
 public:
  struct Tape {
    Matrix x;
    Matrix h1;
    Matrix cond;  // 1 x N
  };

  ResBlock() = default;
  ResBlock(Index in, Index out, Index kernel, Rng& rng, const std::string& name);

  Matrix forward(const Matrix& x, const Matrix& cond, Index length, Tape* tape) const;
  Matrix backward(const Tape& tape, const Matrix& dy, Index length);
  void collect(ParamList& out);

 private:
  Conv1d conv1_, conv2_;
  Param emb_scale_, emb_shift_;
  bool has_skip_ = false;
  Conv1d skip_;
};

/// 1-D U-Net over the transition axis. Input/output are (channels x B*L);
/// the per-sample conditioning scalar is appended as an extra input channel
/// and fed to every block. The output convolution is zero-initialized.
class UNet1d {
 public:
  UNet1d() = default;
  UNet1d(UNetConfig cfg, Rng& rng);

  /// Stateless evaluation; safe to call concurrently. `cond` has one entry per sample.
  Matrix infer(const Matrix& x, const Vector& cond, Index length) const;
  Matrix forward(const Matrix& x, const Vector& cond, Index length);
  /// Parameter gradients for the last forward(); returns dL/dx.
  Matrix backward(const Matrix& dy);

  ParamList params();
  const UNetConfig& config() const { return cfg_; }

 private:
  struct Tape {
    Index length = 0;
    Matrix input;
    std::vector<ResBlock::Tape> down, up;
    ResBlock::Tape mid;
    Matrix pre_out;
  };

  Matrix run(const Matrix& x, const Vector& cond, Index length, Tape* tape) const;
  void check_input(const Matrix& x, const Vector& cond, Index length) const;

  UNetConfig cfg_;
  Conv1d in_conv_;
  std::vector<ResBlock> down_, up_;
  ResBlock mid_;
  Conv1d out_conv_;
  Tape tape_;
  bool recorded_ = false;
};

/// Broadcasts one value per sample to every position: (1 x B*L).
Matrix expand_per_position(const Vector& per_sample, Index length);

}  // namespace trajforge::nn
