#include "flatres/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

namespace flatres {

TargetSet finite_diff_targets(const Trajectory& traj, const PlantFn& nominal) {
  const Eigen::Index n = traj.samples();
  if (n < 2)
    throw std::invalid_argument("finite_diff_targets: need at least 2 samples");
  const double dt0 = traj.t[1] - traj.t[0];
  TargetSet out;
  out.x.resize(n - 1, traj.x.cols());
  out.target.resize(n - 1, traj.x.cols());
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    const double dt = traj.t[k + 1] - traj.t[k];
    if (dt <= 0.0 || std::abs(dt - dt0) > 1e-9 * std::max(1.0, std::abs(dt0)))
      throw std::invalid_argument(
          "finite_diff_targets: non-uniform or zero time steps");
    const Eigen::VectorXd xk = traj.x.row(k);
    const Eigen::VectorXd uk = traj.u.row(k);
    out.x.row(k) = xk;
    out.target.row(k) =
        ((traj.x.row(k + 1) - traj.x.row(k)) / dt).transpose() - nominal(xk, uk);
  }
  return out;
}

TargetSet finite_diff_targets(const Dataset& ds, const PlantFn& nominal) {
  Eigen::Index total = 0;
  for (const auto& tr : ds.trajectories) total += tr.samples() - 1;
  TargetSet out;
  if (ds.trajectories.empty()) return out;
  out.x.resize(total, ds.trajectories[0].x.cols());
  out.target.resize(total, ds.trajectories[0].x.cols());
  Eigen::Index row = 0;
  for (const auto& tr : ds.trajectories) {
    TargetSet one = finite_diff_targets(tr, nominal);
    out.x.middleRows(row, one.x.rows()) = one.x;
    out.target.middleRows(row, one.target.rows()) = one.target;
    row += one.x.rows();
  }
  return out;
}

namespace {

std::vector<int> enabled_mlp_blocks(const LowerTriangularResidual& res) {
  std::vector<int> out;
  for (int i = 0; i < res.r; ++i)
    if (res.blocks[static_cast<size_t>(i)].enabled &&
        res.blocks[static_cast<size_t>(i)].kind ==
            LowerTriangularResidual::BlockKind::Mlp)
      out.push_back(i);
  return out;
}

// GeLU and its derivative on plain doubles (training hot path).  The value
// path mirrors gelu<double> operation for operation.
double gelu_plain(double z) {
  return 0.5 * z * (std::erf(z * (1.0 / std::numbers::sqrt2)) + 1.0);
}
double gelu_deriv(double z) {
  const double Phi = 0.5 * (1.0 + std::erf(z / std::numbers::sqrt2));
  const double phi =
      std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return Phi + z * phi;
}

}  // namespace

double loss(const LowerTriangularResidual& res, const TargetSet& targets) {
  double total = 0.0;
  const Eigen::Index n = targets.x.rows();
  SVec<double> xrow(static_cast<size_t>(targets.x.cols()));
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index i = 0; i < targets.x.cols(); ++i)
      xrow[static_cast<size_t>(i)] = targets.x(k, i);
    for (int b = 0; b < res.r; ++b) {
      if (!res.blocks[static_cast<size_t>(b)].enabled) continue;
      if ((b + 1) * res.m > targets.x.cols()) continue;
      SVec<double> pred = res.eval_block<double>(b, xrow);
      for (int j = 0; j < res.m; ++j) {
        const double e =
            targets.target(k, b * res.m + j) - pred[static_cast<size_t>(j)];
        total += e * e;
      }
    }
  }
  return total;
}

double loss(const LowerTriangularResidual& res, const Dataset& ds,
            const PlantFn& nominal) {
  if (ds.trajectories.empty())
    throw std::invalid_argument("loss: empty dataset");
  return loss(res, finite_diff_targets(ds, nominal));
}

Eigen::VectorXd trainable_params(const LowerTriangularResidual& res) {
  std::vector<int> blocks = enabled_mlp_blocks(res);
  Eigen::Index total = 0;
  for (int b : blocks)
    total += res.blocks[static_cast<size_t>(b)].mlp.param_count();
  Eigen::VectorXd p(total);
  Eigen::Index o = 0;
  for (int b : blocks) {
    const auto& mlp = res.blocks[static_cast<size_t>(b)].mlp;
    p.segment(o, mlp.param_count()) = mlp.params();
    o += mlp.param_count();
  }
  return p;
}

void set_trainable_params(LowerTriangularResidual& res,
                          const Eigen::VectorXd& p) {
  std::vector<int> blocks = enabled_mlp_blocks(res);
  Eigen::Index o = 0;
  for (int b : blocks) {
    auto& mlp = res.blocks[static_cast<size_t>(b)].mlp;
    mlp.set_params(p.segment(o, mlp.param_count()));
    o += mlp.param_count();
  }
  if (o != p.size())
    throw std::invalid_argument("set_trainable_params: size mismatch");
}

Eigen::VectorXd grad(const LowerTriangularResidual& res, const TargetSet& batch,
                     const std::vector<int>& sample_indices) {
  std::vector<int> blocks = enabled_mlp_blocks(res);
  Eigen::Index total = 0;
  for (int b : blocks)
    total += res.blocks[static_cast<size_t>(b)].mlp.param_count();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(total);

  Eigen::Index offset = 0;
  for (int b : blocks) {
    const auto& mlp = res.blocks[static_cast<size_t>(b)].mlp;
    const int in = mlp.in_dim, hid = mlp.hidden, out = mlp.out_dim;
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>>
        gw1(g.data() + offset, hid, in);
    Eigen::Map<Eigen::VectorXd> gb1(g.data() + offset + hid * in, hid);
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>>
        gw2(g.data() + offset + hid * in + hid, out, hid);
    Eigen::Map<Eigen::VectorXd> gb2(
        g.data() + offset + hid * in + hid + out * hid, out);

    Eigen::VectorXd xn(in), z1(hid), a(hid), e(out), dh(hid);
    for (int s : sample_indices) {
      // Forward pass with exactly the accumulation order of
      // MlpBlock::forward, so predictions match inference bit for bit.
      for (int i = 0; i < in; ++i)
        xn[i] = (batch.x(s, i) - mlp.in_mean[i]) * (1.0 / mlp.in_scale[i]);
      for (int j = 0; j < hid; ++j) {
        double z = mlp.w1(j, 0) * xn[0];
        for (int i = 1; i < in; ++i) z = z + mlp.w1(j, i) * xn[i];
        z1[j] = z + mlp.b1[j];
        a[j] = gelu_plain(z1[j]);
      }
      for (int k = 0; k < out; ++k) {
        double z = mlp.w2(k, 0) * a[0];
        for (int j = 1; j < hid; ++j) z = z + mlp.w2(k, j) * a[j];
        e[k] = 2.0 * ((z + mlp.b2[k]) - batch.target(s, b * res.m + k));
      }
      gw2 += e * a.transpose();
      gb2 += e;
      dh = mlp.w2.transpose() * e;
      for (int j = 0; j < hid; ++j) dh[j] *= gelu_deriv(z1[j]);
      gw1 += dh * xn.transpose();
      gb1 += dh;
    }
    offset += mlp.param_count();
  }
  return g;
}

void AdamState::update(Eigen::VectorXd& params, const Eigen::VectorXd& g) {
  ++step;
  m = beta1 * m + (1.0 - beta1) * g;
  v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  params -= (lr / bc1) * m.cwiseQuotient(
                             ((v / bc2).cwiseSqrt().array() + eps).matrix());
}

TrainResult train(const Dataset& ds, const PlantFn& nominal, int r, int m,
                  const TrainConfig& cfg) {
  if (ds.trajectories.empty())
    throw std::invalid_argument("train: empty dataset");
  const int state_dim = ds.state_dim();

  LowerTriangularResidual res = zero_residual(r, m);
  for (int b : cfg.learned_blocks) {
    if (b < 0 || b >= r) throw std::invalid_argument("train: bad block index");
    if ((b + 1) * m > state_dim)
      throw std::invalid_argument(
          "train: learned block reads beyond the dataset state dimension");
    auto& blk = res.blocks[static_cast<size_t>(b)];
    blk.kind = LowerTriangularResidual::BlockKind::Mlp;
    blk.enabled = true;
    blk.mlp = make_mlp((b + 1) * m, m, cfg.hidden);
  }

  // Held-out split by trajectory: the trailing fraction validates.
  const auto n_traj = ds.trajectories.size();
  const auto n_val = static_cast<size_t>(
      std::floor(cfg.val_fraction * static_cast<double>(n_traj)));
  Dataset train_ds, val_ds;
  train_ds.trajectories.assign(ds.trajectories.begin(),
                               ds.trajectories.end() - static_cast<long>(n_val));
  val_ds.trajectories.assign(ds.trajectories.end() - static_cast<long>(n_val),
                             ds.trajectories.end());

  const TargetSet targets = finite_diff_targets(train_ds, nominal);
  const auto n_samples = static_cast<int>(targets.x.rows());

  // Input standardization from the training inputs of each block.
  for (int b : cfg.learned_blocks) {
    auto& mlp = res.blocks[static_cast<size_t>(b)].mlp;
    for (int i = 0; i < mlp.in_dim; ++i) {
      const double mean = targets.x.col(i).mean();
      const double var =
          (targets.x.col(i).array() - mean).square().sum() / n_samples;
      mlp.in_mean[i] = mean;
      mlp.in_scale[i] = std::max(std::sqrt(var), 1e-8);
    }
  }

  // Glorot-uniform weights, zero biases, one deterministic stream.
  std::mt19937_64 rng(cfg.seed);
  for (int b : cfg.learned_blocks) {
    auto& mlp = res.blocks[static_cast<size_t>(b)].mlp;
    auto init = [&rng](Eigen::MatrixXd& w) {
      const double bound =
          std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = dist(rng);
    };
    init(mlp.w1);
    init(mlp.w2);
  }

  TrainResult result;
  result.log.initial_loss = loss(res, targets);

  Eigen::VectorXd params = trainable_params(res);
  AdamState adam(params.size(), cfg.lr);

  std::vector<int> order(static_cast<size_t>(n_samples));
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (int start = 0; start < n_samples; start += cfg.batch) {
      const int stop = std::min(start + cfg.batch, n_samples);
      std::vector<int> batch(order.begin() + start, order.begin() + stop);
      Eigen::VectorXd g = grad(res, targets, batch);
      adam.update(params, g);
      set_trainable_params(res, params);
    }
    const double epoch_loss = loss(res, targets);
    if (!std::isfinite(epoch_loss))
      throw std::runtime_error("train: loss diverged (non-finite) at epoch " +
                               std::to_string(epoch));
    result.log.epoch_loss.push_back(epoch_loss);
  }
  result.log.final_loss =
      result.log.epoch_loss.empty() ? result.log.initial_loss
                                    : result.log.epoch_loss.back();

  if (!val_ds.trajectories.empty()) {
    const TargetSet val = finite_diff_targets(val_ds, nominal);
    SVec<double> xrow(static_cast<size_t>(val.x.cols()));
    for (int b : cfg.learned_blocks) {
      double mse = 0.0;
      for (Eigen::Index k = 0; k < val.x.rows(); ++k) {
        for (Eigen::Index i = 0; i < val.x.cols(); ++i)
          xrow[static_cast<size_t>(i)] = val.x(k, i);
        SVec<double> pred = res.eval_block<double>(b, xrow);
        for (int j = 0; j < m; ++j) {
          const double e =
              val.target(k, b * m + j) - pred[static_cast<size_t>(j)];
          mse += e * e;
        }
      }
      result.log.val_block_mse.push_back(mse /
                                         static_cast<double>(val.x.rows()));
    }
  }

  result.residual = std::move(res);
  return result;
}

}  // namespace flatres
