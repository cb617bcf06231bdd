#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "flatres/dataset.hpp"
#include "flatres/flat_map.hpp"
#include "flatres/quadrotor2d.hpp"
#include "flatres/reference.hpp"

namespace flatres {

/// Simulated rollout: states, inputs, and (for closed-loop runs) the
/// wall-clock duration of each controller call.
struct SimTrajectory {
  std::vector<double> t;
  std::vector<Eigen::VectorXd> x;
  std::vector<Eigen::VectorXd> u;
  std::vector<std::int64_t> controller_ns;  // empty for open loop
};

/// Mean Euclidean position error against the reference, averaged over the
/// samples with k >= 1 when the trajectory starts at t = 0 (the initial
/// sample sits on the reference by construction).
double position_error(const SimTrajectory& traj, const Reference& ref);

/// Writes t, x..., u... (and controller_ns when present) as delimited text
/// with a header row; '#' comment lines carry run metadata.
void write_trajectory_csv(const SimTrajectory& traj, const std::string& path,
                          const std::vector<std::string>& comments = {});

/// Open-loop experiment: u(t) = Psi(y_r(t), ..., y_r^(4)(t)) from the given
/// diffeomorphism, rolled out under `plant` (RK4, stages sample the input
/// signal at their own times).  The initial state is Phi applied to the
/// reference jets at t = 0.
SimTrajectory open_loop_rollout(const PlantFn& plant,
                                const FlatnessDiffeomorphism& diffeo,
                                const Reference& ref, double dt = 1e-2,
                                double T = 14.0);

/// Roots of a monic polynomial s^n + c_{n-1} s^{n-1} + ... + c_0 via the
/// companion matrix; coeffs are ascending (c_0 first, without the leading 1).
std::vector<std::complex<double>> monic_poly_roots(
    const std::vector<double>& coeffs);
bool is_hurwitz(const std::vector<double>& coeffs);

/// Integrator-chain Luenberger observer for the flat channels: estimates
/// (y, ydot, ..., y^(r-1)) per channel from position measurements, driven by
/// the commanded top derivative.  Sampled-data design: the chain is
/// discretized exactly over the update period and the injection gains are
/// placed by Ackermann's formula so every observer pole sits at
/// exp(pole * dt).  Predict with the held input, then correct with the
/// current measurement.
class ChainObserver {
 public:
  ChainObserver() = default;
  ChainObserver(int channels, int order, double pole);

  void reset(const Eigen::MatrixXd& initial);  // order x channels
  /// Advance one sample period dt: predict with the held top derivative nu,
  /// correct with the measurement y taken at the new sample instant.
  void update(const Eigen::VectorXd& y, const Eigen::VectorXd& nu, double dt);

  const Eigen::MatrixXd& estimate() const { return z_; }
  /// Discrete injection gains for the current sample period.
  const Eigen::VectorXd& gains() const { return l_; }

 private:
  void design(double dt);

  Eigen::MatrixXd z_;   // order x channels
  Eigen::MatrixXd ad_;  // exact chain discretization
  Eigen::VectorXd bd_;  // held top-derivative input column
  Eigen::VectorXd l_;   // current-estimator injection gains
  double pole_ = -40.0;
  double dt_ = 0.0;
  int channels_ = 0;
  int order_ = 0;
};

enum class DerivativeSource { Algebraic, Observer };

/// Reference supplier: m jets of the requested order at time t.
using RefJetsFn = std::function<std::vector<Jet>(double, int)>;

/// Flatness-based tracking controller: reconstructs the flat-output
/// derivative stack from the measured state, applies the virtual input law
///   nu = y_r^(r) - sum_j k_j (y^(j) - y_r^(j)),
/// and inverts through the diffeomorphism, u = Psi(y, ..., y^(r-1), nu).
class FlatTrackingController {
 public:
  FlatTrackingController(FlatnessDiffeomorphism diffeo, RefJetsFn ref,
                         std::vector<double> gains = {3.96, 12.08, 13.16, 6.03},
                         DerivativeSource source = DerivativeSource::Algebraic,
                         double observer_pole = -40.0,
                         double control_period = 0.01);

  FlatTrackingController(FlatnessDiffeomorphism diffeo, const Reference& ref,
                         std::vector<double> gains = {3.96, 12.08, 13.16, 6.03},
                         DerivativeSource source = DerivativeSource::Algebraic,
                         double observer_pole = -40.0,
                         double control_period = 0.01);

  Eigen::VectorXd step(const Eigen::VectorXd& x_measured, double t);
  void reset(const Eigen::VectorXd& x0, double t0);

  const FlatnessDiffeomorphism& diffeo() const { return diffeo_; }
  const std::vector<double>& gains() const { return gains_; }
  std::uint64_t model_checksum() const { return diffeo_.residual.checksum(); }

 private:
  FlatnessDiffeomorphism diffeo_;
  RefJetsFn ref_;
  std::vector<double> gains_;
  DerivativeSource source_;
  ChainObserver observer_;
  Eigen::VectorXd last_nu_;
  double control_period_;
  bool observer_initialized_ = false;
};

Eigen::VectorXd flat_control_step(FlatTrackingController& controller,
                                  const Eigen::VectorXd& x_measured, double t);

struct ClosedLoopOptions {
  double T = 14.0;
  double control_rate = 100.0;  // Hz, zero-order hold
  double plant_dt = 1e-3;       // RK4 substep
  Eigen::VectorXd x0;
};

using ControllerFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)>;

struct ClosedLoopResult {
  SimTrajectory traj;
  bool completed = false;
  std::string error;  // message of the aborting controller error, if any
};

/// Zero-order-hold closed loop: the controller runs at control_rate, the
/// plant integrates with RK4 substeps of plant_dt.  Controller wall-clock
/// durations are recorded per step.  Controller errors abort the run; the
/// partial trajectory comes back with completed = false.
ClosedLoopResult closed_loop_run(const PlantFn& plant,
                                 const ControllerFn& controller,
                                 const ClosedLoopOptions& opts);

struct TimingStats {
  double median_ns = 0.0;
  double mean_ns = 0.0;
  double std_ns = 0.0;
  int count = 0;
};

/// Per-step controller timing after discarding `warmup` initial steps.
TimingStats timing_stats(const SimTrajectory& traj, int warmup = 100);

struct DataGenConfig {
  QuadrotorParams quad;
  int n_trajectories = 3000;
  double duration = 0.5;        // s per trajectory
  double sample_rate = 100.0;   // Hz, also the input update rate
  double plant_dt = 1e-3;       // RK4 substep
  // init box half-widths for (px, py, vx, vy, theta, omega)
  Eigen::VectorXd init_halfwidth =
      (Eigen::VectorXd(6) << 1.0, 1.0, 0.5, 0.5, 0.05, 0.1).finished();
  double thrust_lo = 8.98, thrust_hi = 10.98;
  double torque_lo = -0.5, torque_hi = 0.5;
  std::uint64_t seed = 0;
};

/// Random-excitation data collection on the original-coordinate true plant:
/// uniformly sampled initial states, piecewise-constant uniformly sampled
/// inputs at the sample rate, RK4 substeps in between.  Deterministic for a
/// fixed seed.
Dataset generate_training_data(const DataGenConfig& cfg);

}  // namespace flatres
