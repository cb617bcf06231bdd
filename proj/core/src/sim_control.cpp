#include "flatres/sim_control.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "flatres/errors.hpp"
#include "flatres/integrate.hpp"

namespace flatres {

double position_error(const SimTrajectory& traj, const Reference& ref) {
  if (traj.t.empty()) throw std::invalid_argument("position_error: empty trajectory");
  // Samples at k >= 1 per the error definition; a trajectory starting at
  // t = 0 contributes from its second sample.
  const size_t first = traj.t.front() == 0.0 ? 1 : 0;
  if (traj.t.size() <= first)
    throw std::invalid_argument("position_error: no scored samples");
  double sum = 0.0;
  for (size_t k = first; k < traj.t.size(); ++k) {
    const Eigen::Vector2d p = ref.position(traj.t[k]);
    sum += (traj.x[k].head<2>() - p).norm();
  }
  return sum / static_cast<double>(traj.t.size() - first);
}

void write_trajectory_csv(const SimTrajectory& traj, const std::string& path,
                          const std::vector<std::string>& comments) {
  std::ofstream f(path);
  if (!f) throw ParseError("write_trajectory_csv: cannot open " + path);
  for (const auto& c : comments) f << "# " << c << "\n";
  const bool timed = !traj.controller_ns.empty();
  const auto nx = traj.x.empty() ? 0 : traj.x[0].size();
  const auto nu = traj.u.empty() ? 0 : traj.u[0].size();
  f << "t";
  for (Eigen::Index i = 0; i < nx; ++i) f << ",x" << i;
  for (Eigen::Index i = 0; i < nu; ++i) f << ",u" << i;
  if (timed) f << ",controller_ns";
  f << "\n";
  char buf[32];
  for (size_t k = 0; k < traj.t.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", traj.t[k]);
    f << buf;
    for (Eigen::Index i = 0; i < nx; ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g", traj.x[k][i]);
      f << buf;
    }
    for (Eigen::Index i = 0; i < nu; ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g", traj.u[k][i]);
      f << buf;
    }
    if (timed) f << "," << (k < traj.controller_ns.size() ? traj.controller_ns[k] : 0);
    f << "\n";
  }
}

SimTrajectory open_loop_rollout(const PlantFn& plant,
                                const FlatnessDiffeomorphism& diffeo,
                                const Reference& ref, double dt, double T) {
  const int order = diffeo.model.r;  // input needs y through y^(r)
  auto input_at = [&](double t) {
    return input_from_flat(diffeo, ref.jets(t, order));
  };
  auto field = [&](const Eigen::VectorXd& x, double t) {
    return plant(x, input_at(t));
  };

  SimTrajectory traj;
  const int steps = static_cast<int>(std::llround(T / dt));
  Eigen::VectorXd x = state_from_flat(diffeo, ref.jets(0.0, order));
  for (int k = 0; k <= steps; ++k) {
    const double t = k * dt;
    traj.t.push_back(t);
    traj.x.push_back(x);
    traj.u.push_back(input_at(t));
    if (k < steps) x = rk4_step_tv(field, x, t, dt);
  }
  return traj;
}

std::vector<std::complex<double>> monic_poly_roots(
    const std::vector<double>& coeffs) {
  const auto n = static_cast<Eigen::Index>(coeffs.size());
  if (n == 0) return {};
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) companion(i + 1, i) = 1.0;
  for (Eigen::Index i = 0; i < n; ++i)
    companion(i, n - 1) = -coeffs[static_cast<size_t>(i)];
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  std::vector<std::complex<double>> roots;
  for (Eigen::Index i = 0; i < n; ++i)
    roots.push_back(solver.eigenvalues()[i]);
  return roots;
}

bool is_hurwitz(const std::vector<double>& coeffs) {
  for (const auto& root : monic_poly_roots(coeffs))
    if (root.real() >= 0.0) return false;
  return true;
}

ChainObserver::ChainObserver(int channels, int order, double pole)
    : pole_(pole), channels_(channels), order_(order) {
  if (pole >= 0.0)
    throw std::invalid_argument("ChainObserver: pole must be negative");
  z_ = Eigen::MatrixXd::Zero(order, channels);
}

void ChainObserver::design(double dt) {
  const int n = order_;
  // Exact ZOH discretization of the integrator chain with the top
  // derivative held: ad_(i, j) = dt^(j-i) / (j-i)!.
  ad_ = Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < n; ++i) {
    double term = 1.0;
    for (int j = i + 1; j < n; ++j) {
      term *= dt / (j - i);
      ad_(i, j) = term;
    }
  }
  bd_.resize(n);
  double term = 1.0;
  for (int i = n - 1; i >= 0; --i) {
    term *= dt / (n - i);
    bd_[i] = term;
  }

  // Ackermann's formula: prediction gains placing every eigenvalue of
  // (Ad - Lp C) at exp(pole dt), then the current-estimator form
  // Lc = Ad^-1 Lp (same spectrum by similarity).
  const double lambda = std::exp(pole_ * dt);
  Eigen::MatrixXd obsv(n, n);
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n);
  row[0] = 1.0;  // C
  for (int i = 0; i < n; ++i) {
    obsv.row(i) = row;
    row = row * ad_;
  }
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < n; ++i)
    q = q * (ad_ - lambda * Eigen::MatrixXd::Identity(n, n));
  Eigen::VectorXd e_last = Eigen::VectorXd::Zero(n);
  e_last[n - 1] = 1.0;
  const Eigen::VectorXd lp = q * obsv.partialPivLu().solve(e_last);
  l_ = ad_.partialPivLu().solve(lp);
  dt_ = dt;
}

void ChainObserver::reset(const Eigen::MatrixXd& initial) {
  if (initial.rows() != order_ || initial.cols() != channels_)
    throw std::invalid_argument("ChainObserver::reset: shape mismatch");
  z_ = initial;
}

void ChainObserver::update(const Eigen::VectorXd& y, const Eigen::VectorXd& nu,
                           double dt) {
  if (y.size() != channels_ || nu.size() != channels_)
    throw std::invalid_argument("ChainObserver::update: shape mismatch");
  if (dt != dt_) design(dt);
  const Eigen::MatrixXd predicted = ad_ * z_ + bd_ * nu.transpose();
  const Eigen::RowVectorXd innovation = y.transpose() - predicted.row(0);
  z_ = predicted + l_ * innovation;
}

FlatTrackingController::FlatTrackingController(FlatnessDiffeomorphism diffeo,
                                               const Reference& ref,
                                               std::vector<double> gains,
                                               DerivativeSource source,
                                               double observer_pole,
                                               double control_period)
    : FlatTrackingController(
          std::move(diffeo),
          [ref](double t, int order) { return ref.jets(t, order); },
          std::move(gains), source, observer_pole, control_period) {}

FlatTrackingController::FlatTrackingController(FlatnessDiffeomorphism diffeo,
                                               RefJetsFn ref,
                                               std::vector<double> gains,
                                               DerivativeSource source,
                                               double observer_pole,
                                               double control_period)
    : diffeo_(std::move(diffeo)),
      ref_(std::move(ref)),
      gains_(std::move(gains)),
      source_(source),
      control_period_(control_period) {
  const int r = diffeo_.model.r;
  if (static_cast<int>(gains_.size()) != r)
    throw std::invalid_argument("FlatTrackingController: need r gains");
  for (double k : gains_)
    if (k <= 0.0)
      throw std::invalid_argument("FlatTrackingController: gains must be positive");
  if (!is_hurwitz(gains_))
    throw std::invalid_argument(
        "FlatTrackingController: closed-loop polynomial is not Hurwitz");
  observer_ = ChainObserver(diffeo_.model.m > 0 ? diffeo_.model.m : 1, r,
                            observer_pole);
  last_nu_ = Eigen::VectorXd::Zero(diffeo_.model.m);
}

void FlatTrackingController::reset(const Eigen::VectorXd& x0, double /*t0*/) {
  const int r = diffeo_.model.r, m = diffeo_.model.m;
  // Seed the chain with the algebraic reconstruction; the injection gains
  // scale like 1/dt^k, so a cold-zero stack would slam the input chain
  // during the first few samples.
  Eigen::MatrixXd init = Eigen::MatrixXd::Zero(r, m);
  const std::vector<Jet> ys = flat_derivatives_from_state(diffeo_, x0);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < r; ++i) init(i, j) = ys[static_cast<size_t>(j)].derivative(i);
  observer_.reset(init);
  observer_initialized_ = true;
  last_nu_.setZero();
}

Eigen::VectorXd FlatTrackingController::step(const Eigen::VectorXd& x_measured,
                                             double t) {
  const int r = diffeo_.model.r, m = diffeo_.model.m;
  const std::vector<Jet> yr = ref_(t, r);

  // Derivative stack (y, ..., y^(r-1)) of each flat channel.
  Eigen::MatrixXd est(r, m);
  if (source_ == DerivativeSource::Algebraic) {
    const std::vector<Jet> ys = flat_derivatives_from_state(diffeo_, x_measured);
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < r; ++i) est(i, j) = ys[static_cast<size_t>(j)].derivative(i);
  } else {
    const Eigen::VectorXd y = x_measured.head(m);
    if (!observer_initialized_) {
      reset(x_measured, t);
    } else {
      observer_.update(y, last_nu_, control_period_);
    }
    est = observer_.estimate();
  }

  // Virtual input on the integrator chain y^(r) = nu.
  Eigen::VectorXd nu(m);
  for (int j = 0; j < m; ++j) {
    double v = yr[static_cast<size_t>(j)].derivative(r);
    for (int i = 0; i < r; ++i)
      v -= gains_[static_cast<size_t>(i)] *
           (est(i, j) - yr[static_cast<size_t>(j)].derivative(i));
    nu[j] = v;
  }
  last_nu_ = nu;

  std::vector<Jet> y_jets;
  y_jets.reserve(static_cast<size_t>(m));
  for (int j = 0; j < m; ++j) {
    std::vector<double> derivs(static_cast<size_t>(r));
    for (int i = 1; i < r; ++i) derivs[static_cast<size_t>(i - 1)] = est(i, j);
    derivs[static_cast<size_t>(r - 1)] = nu[j];
    y_jets.push_back(jet_lift(est(0, j), derivs));
  }
  return input_from_flat(diffeo_, y_jets);
}

Eigen::VectorXd flat_control_step(FlatTrackingController& controller,
                                  const Eigen::VectorXd& x_measured, double t) {
  return controller.step(x_measured, t);
}

ClosedLoopResult closed_loop_run(const PlantFn& plant,
                                 const ControllerFn& controller,
                                 const ClosedLoopOptions& opts) {
  ClosedLoopResult result;
  const double period = 1.0 / opts.control_rate;
  const int steps = static_cast<int>(std::llround(opts.T * opts.control_rate));
  const int substeps =
      std::max(1, static_cast<int>(std::llround(period / opts.plant_dt)));
  const double dt = period / substeps;

  Eigen::VectorXd x = opts.x0;
  SimTrajectory& traj = result.traj;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(0);
  for (int k = 0; k < steps; ++k) {
    const double t = k * period;
    const auto tic = std::chrono::steady_clock::now();
    try {
      u = controller(x, t);
    } catch (const DomainError& e) {
      result.error = e.what();
      return result;
    }
    const auto toc = std::chrono::steady_clock::now();
    traj.t.push_back(t);
    traj.x.push_back(x);
    traj.u.push_back(u);
    traj.controller_ns.push_back(
        std::chrono::duration_cast<std::chrono::nanoseconds>(toc - tic).count());
    for (int s = 0; s < substeps; ++s) x = rk4_step(plant, x, u, dt);
  }
  traj.t.push_back(steps * period);
  traj.x.push_back(x);
  traj.u.push_back(u);
  traj.controller_ns.push_back(0);
  result.completed = true;
  return result;
}

TimingStats timing_stats(const SimTrajectory& traj, int warmup) {
  TimingStats stats;
  // The trailing sample carries no controller call.
  const auto n = static_cast<int>(traj.controller_ns.size()) - 1;
  if (n <= warmup) warmup = std::max(0, n / 2);
  std::vector<double> ns;
  for (int k = warmup; k < n; ++k)
    ns.push_back(static_cast<double>(traj.controller_ns[static_cast<size_t>(k)]));
  if (ns.empty()) return stats;
  stats.count = static_cast<int>(ns.size());
  std::sort(ns.begin(), ns.end());
  stats.median_ns = ns[ns.size() / 2];
  double mean = 0.0;
  for (double v : ns) mean += v;
  mean /= static_cast<double>(ns.size());
  stats.mean_ns = mean;
  double var = 0.0;
  for (double v : ns) var += (v - mean) * (v - mean);
  stats.std_ns = ns.size() > 1 ? std::sqrt(var / static_cast<double>(ns.size() - 1)) : 0.0;
  return stats;
}

Dataset generate_training_data(const DataGenConfig& cfg) {
  Dataset ds;
  ds.sample_rate = cfg.sample_rate;
  ds.duration = cfg.duration;
  ds.seed = cfg.seed;

  const double period = 1.0 / cfg.sample_rate;
  const int steps = static_cast<int>(std::llround(cfg.duration * cfg.sample_rate));
  const int substeps =
      std::max(1, static_cast<int>(std::llround(period / cfg.plant_dt)));
  const double dt = period / substeps;

  auto plant = [&cfg](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    return true_plant_original(cfg.quad, x, u);
  };

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> thrust(cfg.thrust_lo, cfg.thrust_hi);
  std::uniform_real_distribution<double> torque(cfg.torque_lo, cfg.torque_hi);

  ds.trajectories.reserve(static_cast<size_t>(cfg.n_trajectories));
  for (int n = 0; n < cfg.n_trajectories; ++n) {
    Trajectory tr;
    tr.t.resize(steps);
    tr.x.resize(steps, 6);
    tr.u.resize(steps, 2);
    Eigen::VectorXd x(6);
    for (int i = 0; i < 6; ++i) x[i] = cfg.init_halfwidth[i] * unit(rng);
    for (int k = 0; k < steps; ++k) {
      Eigen::VectorXd u(2);
      u << thrust(rng), torque(rng);
      tr.t[k] = k * period;
      tr.x.row(k) = x;
      tr.u.row(k) = u;
      for (int s = 0; s < substeps; ++s) x = rk4_step(plant, x, u, dt);
    }
    ds.trajectories.push_back(std::move(tr));
  }
  return ds;
}

}  // namespace flatres
