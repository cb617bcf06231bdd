#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <vector>

#include "flatres/dataset.hpp"
#include "flatres/residual.hpp"

namespace flatres {

/// One-step finite-difference residual targets along a trajectory:
///   target(t_k) = (x(t_{k+1}) - x(t_k)) / dt - f_nominal(x(t_k), u(t_k)).
/// The last sample has no successor and is dropped.  Throws on fewer than
/// two samples or non-uniform/zero time steps.
struct TargetSet {
  Eigen::MatrixXd x;        // samples x state_dim
  Eigen::MatrixXd target;   // samples x state_dim
};
TargetSet finite_diff_targets(const Trajectory& traj, const PlantFn& nominal);
TargetSet finite_diff_targets(const Dataset& ds, const PlantFn& nominal);

/// Summed squared error between targets and the residual prediction,
/// restricted to the rows of enabled blocks.
double loss(const LowerTriangularResidual& res, const TargetSet& targets);
double loss(const LowerTriangularResidual& res, const Dataset& ds,
            const PlantFn& nominal);

/// Exact gradient of the summed squared loss on a row range of the target
/// set, by reverse accumulation through every enabled MLP block.  Layout
/// matches trainable_params(): per enabled block, w1 row-major, b1, w2
/// row-major, b2.
Eigen::VectorXd grad(const LowerTriangularResidual& res, const TargetSet& batch,
                     const std::vector<int>& sample_indices);

Eigen::VectorXd trainable_params(const LowerTriangularResidual& res);
void set_trainable_params(LowerTriangularResidual& res, const Eigen::VectorXd& p);

/// First/second-moment buffers of the ADAM update.
struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(Eigen::Index n = 0, double lr_ = 1e-3)
      : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)), lr(lr_) {}
  void update(Eigen::VectorXd& params, const Eigen::VectorXd& g);
};

struct TrainConfig {
  int epochs = 20;
  double lr = 1e-3;
  int batch = 256;
  std::uint64_t seed = 0;
  int hidden = 32;
  std::vector<int> learned_blocks = {0, 1};  // 0-based block indices
  double val_fraction = 0.1;                 // held-out trajectories
};

struct TrainLog {
  std::vector<double> epoch_loss;       // summed training loss per epoch
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> val_block_mse;    // per learned block, per-sample MSE
};

struct TrainResult {
  LowerTriangularResidual residual;
  TrainLog log;
};

/// Trains lower-triangular MLP residual blocks on finite-difference targets.
/// Deterministic for a fixed seed: identical seeds produce bitwise-identical
/// parameters.  Throws on divergence (NaN loss).
TrainResult train(const Dataset& ds, const PlantFn& nominal, int r, int m,
                  const TrainConfig& cfg);

}  // namespace flatres
