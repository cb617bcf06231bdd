#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "flatres/pure_feedback.hpp"
#include "flatres/smooth.hpp"

namespace flatres {

/// One-hidden-layer perceptron with GeLU activation and stored input
/// standardization.  The forward pass is generic over the scalar carrier;
/// training-time backpropagation lives in training.cpp.
struct MlpBlock {
  int in_dim = 0;
  int hidden = 32;
  int out_dim = 0;
  Eigen::MatrixXd w1;  // hidden x in
  Eigen::VectorXd b1;  // hidden
  Eigen::MatrixXd w2;  // out x hidden
  Eigen::VectorXd b2;  // out
  Eigen::VectorXd in_mean;   // in
  Eigen::VectorXd in_scale;  // in, strictly positive

  template <SmoothScalar S>
  SVec<S> forward(std::span<const S> x) const {
    SVec<S> xn;
    xn.reserve(static_cast<size_t>(in_dim));
    for (int i = 0; i < in_dim; ++i)
      xn.push_back((x[static_cast<size_t>(i)] - in_mean[i]) * (1.0 / in_scale[i]));
    SVec<S> a;
    a.reserve(static_cast<size_t>(hidden));
    for (int j = 0; j < hidden; ++j) {
      S z = w1(j, 0) * xn[0];
      for (int i = 1; i < in_dim; ++i) z = z + w1(j, i) * xn[static_cast<size_t>(i)];
      a.push_back(gelu(z + b1[j]));
    }
    SVec<S> out;
    out.reserve(static_cast<size_t>(out_dim));
    for (int k = 0; k < out_dim; ++k) {
      S z = w2(k, 0) * a[0];
      for (int j = 1; j < hidden; ++j) z = z + w2(k, j) * a[static_cast<size_t>(j)];
      out.push_back(z + b2[k]);
    }
    return out;
  }

  int param_count() const { return hidden * in_dim + hidden + out_dim * hidden + out_dim; }

  // Flat parameter layout: w1 row-major, b1, w2 row-major, b2.
  Eigen::VectorXd params() const;
  void set_params(const Eigen::VectorXd& p);
};

MlpBlock make_mlp(int in_dim, int out_dim, int hidden = 32);

/// Additive residual with the lower-triangular wiring of the pure-feedback
/// structure: block i consumes the stacked prefix (x_1, ..., x_i) only, so
/// d block_i / d x_j vanishes identically for j > i.
struct LowerTriangularResidual {
  enum class BlockKind { Zero, Exact, Mlp };

  struct Block {
    BlockKind kind = BlockKind::Zero;
    bool enabled = false;  // disabled blocks output zero regardless of kind
    GenericBlock exact;
    MlpBlock mlp;
  };

  int r = 0;
  int m = 0;
  std::vector<Block> blocks;  // size r; block i (0-based) reads first (i+1)*m state entries

  bool is_zero() const;

  bool block_active(int i) const {
    const auto& blk = blocks[static_cast<size_t>(i)];
    return blk.enabled && blk.kind != BlockKind::Zero;
  }

  /// Output of block i on the stacked state prefix (first (i+1)*m entries).
  template <SmoothScalar S>
  SVec<S> eval_block(int i, std::span<const S> state_prefix) const {
    if (!block_active(i))
      return SVec<S>(static_cast<size_t>(m), zero_like(state_prefix[0]));
    const auto& blk = blocks[static_cast<size_t>(i)];
    std::span<const S> in = state_prefix.subspan(0, static_cast<size_t>((i + 1) * m));
    if (blk.kind == BlockKind::Mlp) return blk.mlp.forward<S>(in);
    return blk.exact.fn<S>()(in);
  }

  /// FNV-1a over the structural tags and all MLP parameters; lets two
  /// controllers assert they share the identical learned model.
  std::uint64_t checksum() const;
};

/// Stacked residual value on a full state vector.
Eigen::VectorXd residual_eval(const LowerTriangularResidual& res,
                              const Eigen::VectorXd& x);

LowerTriangularResidual zero_residual(int r, int m);

/// Nominal dynamics plus residual, generic over the scalar carrier.  `xu`
/// stacks the state and the input; the residual only ever reads state
/// entries.
template <SmoothScalar S>
SVec<S> eval_augmented(const PureFeedbackModel& model,
                       const LowerTriangularResidual& res,
                       std::span<const S> xu) {
  SVec<S> out = eval_blocks<S>(model, xu);
  for (int i = 0; i < model.r; ++i) {
    if (!res.block_active(i)) continue;
    SVec<S> d = res.eval_block<S>(i, xu);
    for (int j = 0; j < model.m; ++j)
      out[static_cast<size_t>(i * model.m + j)] =
          out[static_cast<size_t>(i * model.m + j)] + d[static_cast<size_t>(j)];
  }
  return out;
}

}  // namespace flatres
