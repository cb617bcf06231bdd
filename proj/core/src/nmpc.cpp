#include "flatres/nmpc.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "flatres/errors.hpp"
#include "flatres/integrate.hpp"

namespace flatres {

namespace {

struct Linearization {
  std::vector<Eigen::MatrixXd> A;  // d F / d x per interval
  std::vector<Eigen::MatrixXd> B;  // d F / d u per interval
};

Eigen::VectorXd discrete_step(const OcpDynamics& dyn, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u, double dt) {
  SVec<double> xs(x.data(), x.data() + x.size());
  SVec<double> us(u.data(), u.data() + u.size());
  SVec<double> next = rk4_step_generic<double>(
      [&dyn](std::span<const double> xi, std::span<const double> ui) {
        return dyn.on_real(xi, ui);
      },
      std::span<const double>(xs), std::span<const double>(us), dt);
  return to_eigen(next);
}

Linearization linearize(const OcpDynamics& dyn, const Eigen::MatrixXd& x,
                        const Eigen::MatrixXd& u, double dt) {
  const int N = static_cast<int>(u.rows());
  const int n = dyn.state_dim, mu = dyn.input_dim;
  if (n + mu > kMaxDualWidth)
    throw std::invalid_argument("solve_ocp: state+input exceeds dual width");
  Linearization lin;
  lin.A.reserve(static_cast<size_t>(N));
  lin.B.reserve(static_cast<size_t>(N));
  for (int k = 0; k < N; ++k) {
    DualVector xd, ud;
    xd.reserve(static_cast<size_t>(n));
    ud.reserve(static_cast<size_t>(mu));
    for (int i = 0; i < n; ++i) xd.push_back(Dual::seeded(x(k, i), n + mu, i));
    for (int i = 0; i < mu; ++i)
      ud.push_back(Dual::seeded(u(k, i), n + mu, n + i));
    SVec<Dual> next = rk4_step_generic<Dual>(
        [&dyn](std::span<const Dual> xi, std::span<const Dual> ui) {
          return dyn.on_dual(xi, ui);
        },
        std::span<const Dual>(xd), std::span<const Dual>(ud), dt);
    Eigen::MatrixXd A(n, n), B(n, mu);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) A(i, j) = next[static_cast<size_t>(i)].deriv(j);
      for (int j = 0; j < mu; ++j)
        B(i, j) = next[static_cast<size_t>(i)].deriv(n + j);
    }
    lin.A.push_back(std::move(A));
    lin.B.push_back(std::move(B));
  }
  return lin;
}

double max_defect(const OcpDynamics& dyn, const Eigen::MatrixXd& x,
                  const Eigen::MatrixXd& u, double dt) {
  double worst = 0.0;
  for (int k = 0; k < u.rows(); ++k) {
    const Eigen::VectorXd next = discrete_step(dyn, x.row(k), u.row(k), dt);
    worst = std::max(
        worst, (next - x.row(k + 1).transpose()).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace

OcpSolution solve_ocp(const OcpDynamics& dyn, const OcpConfig& cfg,
                      const Eigen::VectorXd& x0, const OutputRefFn& y_ref,
                      double t0, const std::optional<OcpSolution>& warm_start,
                      const KnotInitFn& init) {
  const int N = cfg.steps, n = dyn.state_dim, mu = dyn.input_dim,
            m = cfg.flat_dim;
  const double dt = cfg.dt();
  if (!x0.allFinite()) throw std::invalid_argument("solve_ocp: non-finite x0");

  std::vector<Eigen::VectorXd> yr(static_cast<size_t>(N + 1));
  for (int k = 0; k <= N; ++k) yr[static_cast<size_t>(k)] = y_ref(t0 + k * dt);

  // Inputs from the warm start, the diffeomorphism-based cold start, or zero;
  // knot states always come from rolling the inputs out of the measured x0,
  // so every iterate is dynamically feasible and the transcribed cost is a
  // valid merit function.
  Eigen::MatrixXd u(N, mu);
  if (warm_start) {
    u = warm_start->u;
  } else if (init) {
    for (int k = 0; k < N; ++k) u.row(k) = init(t0 + k * dt).second.transpose();
  } else {
    u.setZero();
  }
  auto rollout = [&](const Eigen::MatrixXd& inputs) {
    Eigen::MatrixXd xs(N + 1, n);
    xs.row(0) = x0.transpose();
    for (int k = 0; k < N; ++k)
      xs.row(k + 1) =
          discrete_step(dyn, xs.row(k), inputs.row(k), dt).transpose();
    return xs;
  };
  Eigen::MatrixXd x = rollout(u);
  if (!x.allFinite())
    throw DomainError("solve_ocp: initial rollout diverged");

  auto transcribed_cost = [&](const Eigen::MatrixXd& xs,
                              const Eigen::MatrixXd& us) {
    double J = 0.0;
    for (int k = 0; k < N; ++k) {
      const Eigen::VectorXd ey =
          xs.row(k).head(m).transpose() - yr[static_cast<size_t>(k)];
      J += dt * (cfg.q_weight * ey.squaredNorm() +
                 cfg.r_weight * us.row(k).squaredNorm());
    }
    const Eigen::VectorXd eN =
        xs.row(N).head(m).transpose() - yr[static_cast<size_t>(N)];
    J += cfg.qt_weight * eN.squaredNorm();
    return J;
  };

  OcpSolution sol;
  double J = transcribed_cost(x, u);
  double lambda = cfg.init_damping;
  int iterations = 0;
  bool converged = false;

  std::vector<Eigen::MatrixXd> K(static_cast<size_t>(N));
  std::vector<Eigen::VectorXd> kff(static_cast<size_t>(N));

  while (iterations < cfg.max_iters && !converged) {
    ++iterations;
    const Linearization lin = linearize(dyn, x, u, dt);

    bool accepted = false;
    while (!accepted && lambda <= cfg.damping_cap) {
      // Backward Riccati sweep on the LM-damped quadratic model.
      bool sweep_ok = true;
      Eigen::MatrixXd V = lambda * Eigen::MatrixXd::Identity(n, n);
      V.topLeftCorner(m, m) +=
          2.0 * cfg.qt_weight * Eigen::MatrixXd::Identity(m, m);
      Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
      v.head(m) = 2.0 * cfg.qt_weight *
                  (x.row(N).head(m).transpose() - yr[static_cast<size_t>(N)]);
      for (int k = N - 1; k >= 0; --k) {
        const Eigen::MatrixXd& A = lin.A[static_cast<size_t>(k)];
        const Eigen::MatrixXd& B = lin.B[static_cast<size_t>(k)];
        Eigen::MatrixXd Hx = lambda * Eigen::MatrixXd::Identity(n, n);
        Hx.topLeftCorner(m, m) +=
            2.0 * dt * cfg.q_weight * Eigen::MatrixXd::Identity(m, m);
        Eigen::VectorXd gx = Eigen::VectorXd::Zero(n);
        gx.head(m) = 2.0 * dt * cfg.q_weight *
                     (x.row(k).head(m).transpose() - yr[static_cast<size_t>(k)]);
        const Eigen::MatrixXd Hu =
            (2.0 * dt * cfg.r_weight + lambda) *
            Eigen::MatrixXd::Identity(mu, mu);
        const Eigen::VectorXd gu =
            2.0 * dt * cfg.r_weight * u.row(k).transpose();

        const Eigen::MatrixXd Qxx = Hx + A.transpose() * V * A;
        const Eigen::MatrixXd Quu = Hu + B.transpose() * V * B;
        const Eigen::MatrixXd Qux = B.transpose() * V * A;
        const Eigen::VectorXd qx = gx + A.transpose() * v;
        const Eigen::VectorXd qu = gu + B.transpose() * v;

        Eigen::LLT<Eigen::MatrixXd> llt(Quu);
        if (llt.info() != Eigen::Success) {
          sweep_ok = false;
          break;
        }
        K[static_cast<size_t>(k)] = -llt.solve(Qux);
        kff[static_cast<size_t>(k)] = -llt.solve(qu);
        V = Qxx + Qux.transpose() * K[static_cast<size_t>(k)];
        V = 0.5 * (V + V.transpose()).eval();
        v = qx + Qux.transpose() * kff[static_cast<size_t>(k)];
      }
      if (!sweep_ok) {
        lambda *= 10.0;
        continue;
      }

      // Forward pass: nonlinear rollout with the feedback gains, so the
      // candidate stays feasible.
      Eigen::MatrixXd xc(N + 1, n), uc(N, mu);
      xc.row(0) = x0.transpose();
      double step_norm = 0.0;
      bool finite = true;
      for (int k = 0; k < N; ++k) {
        const Eigen::VectorXd dx = xc.row(k).transpose() - x.row(k).transpose();
        const Eigen::VectorXd du =
            kff[static_cast<size_t>(k)] + K[static_cast<size_t>(k)] * dx;
        uc.row(k) = u.row(k) + du.transpose();
        step_norm = std::max(step_norm, du.cwiseAbs().maxCoeff());
        const Eigen::VectorXd next = discrete_step(dyn, xc.row(k), uc.row(k), dt);
        if (!next.allFinite()) {
          finite = false;
          break;
        }
        xc.row(k + 1) = next.transpose();
      }

      const double Jc = finite ? transcribed_cost(xc, uc)
                               : std::numeric_limits<double>::infinity();
      if (finite && Jc <= J + 1e-14 * std::max(1.0, std::abs(J))) {
        accepted = true;
        const double improvement = J - Jc;
        x = xc;
        u = uc;
        J = Jc;
        sol.accepted_costs.push_back(J);
        // Shrink the damping while progress lasts; once accepted steps stop
        // paying, grow it so the step norm contracts onto the tolerance.
        if (improvement > 1e-12 * std::max(1.0, std::abs(J)))
          lambda = std::max(lambda * 0.5, cfg.damping_floor);
        else
          lambda = std::min(lambda * 10.0, cfg.damping_cap);
        if (step_norm < cfg.step_tol) converged = true;
      } else {
        lambda *= 10.0;
      }
    }
    if (!accepted) break;  // damping cap hit: report the current iterate
  }

  // Stationarity of the reduced gradient at the returned iterate.
  const Linearization lin = linearize(dyn, x, u, dt);
  Eigen::VectorXd mu_adj = Eigen::VectorXd::Zero(n);
  mu_adj.head(m) = 2.0 * cfg.qt_weight *
                   (x.row(N).head(m).transpose() - yr[static_cast<size_t>(N)]);
  double kkt = 0.0;
  for (int k = N - 1; k >= 0; --k) {
    const Eigen::VectorXd gu =
        2.0 * dt * cfg.r_weight * u.row(k).transpose() +
        lin.B[static_cast<size_t>(k)].transpose() * mu_adj;
    kkt = std::max(kkt, gu.cwiseAbs().maxCoeff());
    Eigen::VectorXd gx = Eigen::VectorXd::Zero(n);
    gx.head(m) = 2.0 * dt * cfg.q_weight *
                 (x.row(k).head(m).transpose() - yr[static_cast<size_t>(k)]);
    mu_adj = gx + lin.A[static_cast<size_t>(k)].transpose() * mu_adj;
  }

  sol.x = x;
  sol.u = u;
  sol.cost = J;
  sol.iterations = iterations;
  sol.converged = converged;
  sol.max_defect = max_defect(dyn, x, u, dt);
  sol.kkt_residual = kkt;
  return sol;
}

MpcController::MpcController(OcpDynamics dyn, OcpConfig cfg, OutputRefFn y_ref,
                             KnotInitFn init)
    : dyn_(std::move(dyn)),
      cfg_(std::move(cfg)),
      y_ref_(std::move(y_ref)),
      init_(std::move(init)) {}

Eigen::VectorXd MpcController::step(const Eigen::VectorXd& x_measured,
                                    double t) {
  last_ = solve_ocp(dyn_, cfg_, x_measured, y_ref_, t, warm_, init_);
  iters_.push_back(last_.iterations);
  costs_.push_back(last_.cost);

  // Shift one knot for the next solve; the last knot repeats.
  OcpSolution shifted = last_;
  const int N = cfg_.steps;
  for (int k = 0; k < N; ++k) shifted.x.row(k) = last_.x.row(k + 1);
  for (int k = 0; k + 1 < N; ++k) shifted.u.row(k) = last_.u.row(k + 1);
  warm_ = shifted;
  return last_.u.row(0);
}

}  // namespace flatres
