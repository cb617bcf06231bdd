#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <span>

#include "flatres/smooth.hpp"

namespace flatres {

/// Continuous-time dynamics of the OCP, callable on doubles (rollouts) and
/// duals (sensitivities through the RK4 discretization).
struct OcpDynamics {
  int state_dim = 0;
  int input_dim = 0;
  std::function<SVec<double>(std::span<const double>, std::span<const double>)>
      on_real;
  std::function<SVec<Dual>(std::span<const Dual>, std::span<const Dual>)>
      on_dual;
};

template <class F>
OcpDynamics make_ocp_dynamics(int state_dim, int input_dim, F f) {
  OcpDynamics d;
  d.state_dim = state_dim;
  d.input_dim = input_dim;
  d.on_real = [f](std::span<const double> x, std::span<const double> u) {
    return f(x, u);
  };
  d.on_dual = [f](std::span<const Dual> x, std::span<const Dual> u) {
    return f(x, u);
  };
  return d;
}

struct OcpConfig {
  double horizon = 1.0;  // s
  int steps = 100;       // RK4 shooting intervals; dt = horizon / steps
  // Weights on the tracked output y = first flat_dim state entries and on u.
  int flat_dim = 2;
  double q_weight = 1.0;
  double r_weight = 1e-3;
  double qt_weight = 1.0;
  int max_iters = 50;
  double step_tol = 1e-6;       // inf-norm of the primal step
  double init_damping = 1e-3;   // Levenberg-Marquardt lambda
  double damping_floor = 1e-9;
  double damping_cap = 1e8;

  double dt() const { return horizon / steps; }
};

struct OcpSolution {
  Eigen::MatrixXd x;  // (steps+1) x state_dim knot states
  Eigen::MatrixXd u;  // steps x input_dim
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
  double max_defect = 0.0;     // inf-norm shooting defect at the solution
  double kkt_residual = 0.0;   // inf-norm reduced gradient over the inputs
  std::vector<double> accepted_costs;  // transcribed cost after each accepted step
};

using OutputRefFn = std::function<Eigen::VectorXd(double)>;
using KnotInitFn =
    std::function<std::pair<Eigen::VectorXd, Eigen::VectorXd>(double)>;

/// Gauss-Newton SQP over the RK4-discretized shooting grid.  Each iteration
/// linearizes the interval maps with one dual-number pass, solves the
/// Levenberg-Marquardt-damped quadratic model with a Riccati sweep, and takes
/// the step as a nonlinear rollout under the resulting feedback gains, so
/// every iterate satisfies the dynamics and the transcribed cost is a valid
/// acceptance merit (x10 damping on reject, x0.5 on accept).  Cold starts
/// take the inputs from `init` when provided (diffeomorphism along the
/// reference), otherwise zero inputs.
OcpSolution solve_ocp(const OcpDynamics& dyn, const OcpConfig& cfg,
                      const Eigen::VectorXd& x0, const OutputRefFn& y_ref,
                      double t0,
                      const std::optional<OcpSolution>& warm_start = {},
                      const KnotInitFn& init = nullptr);

/// Receding-horizon wrapper: solves at the measured state, applies u(0),
/// and shifts the solution one knot (last knot repeated) as the next warm
/// start.
class MpcController {
 public:
  MpcController(OcpDynamics dyn, OcpConfig cfg, OutputRefFn y_ref,
                KnotInitFn init = nullptr);

  Eigen::VectorXd step(const Eigen::VectorXd& x_measured, double t);

  const OcpSolution& last_solution() const { return last_; }
  /// Per-step solve statistics in call order.
  const std::vector<int>& iteration_history() const { return iters_; }
  const std::vector<double>& cost_history() const { return costs_; }
  void reset() { warm_.reset(); iters_.clear(); costs_.clear(); }

 private:
  OcpDynamics dyn_;
  OcpConfig cfg_;
  OutputRefFn y_ref_;
  KnotInitFn init_;
  std::optional<OcpSolution> warm_;
  OcpSolution last_;
  std::vector<int> iters_;
  std::vector<double> costs_;
};

}  // namespace flatres
