#include "flatres/verify.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "flatres/fd.hpp"
#include "flatres/flat_map.hpp"
#include "flatres/model_io.hpp"
#include "flatres/nmpc.hpp"
#include "flatres/reference.hpp"
#include "flatres/sim_control.hpp"
#include "flatres/training.hpp"

namespace flatres {

bool VerifyReport::all_pass() const {
  for (const auto& s : suites)
    if (!s.pass) return false;
  return true;
}

std::string VerifyReport::text() const {
  std::ostringstream out;
  for (const auto& s : suites) {
    out << (s.pass ? "PASS" : "FAIL") << "  " << s.name << "  metric "
        << s.metric << "  tol " << s.tol;
    if (!s.detail.empty()) out << "  (" << s.detail << ")";
    out << "\n";
  }
  out << (all_pass() ? "all suites passed" : "SUITE FAILURES PRESENT") << "\n";
  return out.str();
}

namespace {

using Sample = std::pair<Eigen::VectorXd, Eigen::VectorXd>;

std::vector<Sample> random_valid_samples(std::mt19937_64& rng, int count) {
  std::uniform_real_distribution<double> box(-5.0, 5.0);
  std::uniform_real_distribution<double> thrust(1.0, 20.0);
  std::uniform_real_distribution<double> angle(-1.55, 1.55);
  std::vector<Sample> samples;
  samples.reserve(static_cast<size_t>(count));
  for (int s = 0; s < count; ++s) {
    Eigen::VectorXd x(8), u(2);
    x << box(rng), box(rng), box(rng), box(rng), thrust(rng), angle(rng),
        box(rng), box(rng);
    u << box(rng), box(rng);
    samples.emplace_back(x, u);
  }
  return samples;
}

SuiteResult inverse_identity_suite(const VerifyOptions& opts) {
  const PureFeedbackModel model =
      nominal_extended_model(QuadrotorParams{}, 0.1, opts.fault);
  std::mt19937_64 rng(opts.seed ^ 0x111);
  const auto report = verify_inverse_identity(model, random_valid_samples(rng, 1000));
  SuiteResult r{"inverse-identity", report.overall <= 1e-9, report.overall, 1e-9,
                "1000 samples, worst block violation"};
  return r;
}

// Modest Taylor coefficients keep the high derivatives of the compositions
// small enough for the finite-difference oracle to stay well inside 1e-6.
Jet random_signal(std::mt19937_64& rng, double offset = 0.0) {
  std::uniform_real_distribution<double> coeff(-0.4, 0.4);
  Jet j(offset + coeff(rng), 4);
  for (int k = 1; k <= 4; ++k) j.set_coeff(k, coeff(rng));
  return j;
}

double poly_eval(const Jet& j, double t) {
  double v = 0.0, p = 1.0;
  for (int k = 0; k <= j.order(); ++k) {
    v += j.coeff(k) * p;
    p *= t;
  }
  return v;
}

SuiteResult jet_chain_rule_suite(const VerifyOptions& opts) {
  std::mt19937_64 rng(opts.seed ^ 0x222);
  double worst = 0.0;
  std::string worst_name;
  auto check = [&](const char* name, const Jet& result,
                   const std::function<double(double)>& plain) {
    for (int m = 1; m <= 4; ++m) {
      const double numeric = fd::derivative(plain, 0.0, m);
      const double exact = result.derivative(m);
      const double rel =
          std::abs(exact - numeric) / std::max(1.0, std::abs(numeric));
      if (rel > worst) {
        worst = rel;
        worst_name = name;
      }
    }
  };
  for (int trial = 0; trial < 20; ++trial) {
    const Jet a = random_signal(rng);
    const Jet b = random_signal(rng);
    const Jet pos = random_signal(rng, 3.0);    // stays positive on the stencil
    const Jet den = random_signal(rng, 4.0);    // stays away from zero
    auto fa = [&](double t) { return poly_eval(a, t); };
    auto fb = [&](double t) { return poly_eval(b, t); };
    auto fpos = [&](double t) { return poly_eval(pos, t); };
    auto fden = [&](double t) { return poly_eval(den, t); };
    check("sin", sin(a), [&](double t) { return std::sin(fa(t)); });
    check("cos", cos(a), [&](double t) { return std::cos(fa(t)); });
    check("exp", exp(a), [&](double t) { return std::exp(fa(t)); });
    check("sqrt", sqrt(pos), [&](double t) { return std::sqrt(fpos(t)); });
    check("erf", erf(a), [&](double t) { return std::erf(fa(t)); });
    check("mul", a * b, [&](double t) { return fa(t) * fb(t); });
    check("div", a / den, [&](double t) { return fa(t) / fden(t); });
    check("add", a + b, [&](double t) { return fa(t) + fb(t); });
    check("sub", a - b, [&](double t) { return fa(t) - fb(t); });
    check("atan2", atan2(a, den),
          [&](double t) { return std::atan2(fa(t), fden(t)); });
  }
  return {"jet-chain-rule", worst <= 1e-6, worst, 1e-6,
          "worst primitive: " + worst_name};
}

LowerTriangularResidual random_mlp_residual(std::mt19937_64& rng) {
  LowerTriangularResidual res = zero_residual(4, 2);
  std::uniform_real_distribution<double> w(-0.5, 0.5);
  for (int b : {0, 1}) {
    auto& blk = res.blocks[static_cast<size_t>(b)];
    blk.kind = LowerTriangularResidual::BlockKind::Mlp;
    blk.enabled = true;
    blk.mlp = make_mlp((b + 1) * 2, 2, 16);
    for (Eigen::Index i = 0; i < blk.mlp.w1.size(); ++i)
      blk.mlp.w1.data()[i] = w(rng);
    for (Eigen::Index i = 0; i < blk.mlp.w2.size(); ++i)
      blk.mlp.w2.data()[i] = w(rng);
    for (Eigen::Index i = 0; i < blk.mlp.b1.size(); ++i)
      blk.mlp.b1.data()[i] = 0.1 * w(rng);
    for (Eigen::Index i = 0; i < blk.mlp.b2.size(); ++i)
      blk.mlp.b2.data()[i] = 0.1 * w(rng);
  }
  return res;
}

SuiteResult mlp_gradient_suite(const VerifyOptions& opts) {
  std::mt19937_64 rng(opts.seed ^ 0x333);
  LowerTriangularResidual res = random_mlp_residual(rng);
  std::uniform_real_distribution<double> box(-1.0, 1.0);
  TargetSet batch;
  batch.x.resize(10, 8);
  batch.target.resize(10, 8);
  for (Eigen::Index i = 0; i < batch.x.size(); ++i) batch.x.data()[i] = box(rng);
  for (Eigen::Index i = 0; i < batch.target.size(); ++i)
    batch.target.data()[i] = box(rng);
  std::vector<int> idx(10);
  for (int i = 0; i < 10; ++i) idx[static_cast<size_t>(i)] = i;

  auto batch_loss = [&](const LowerTriangularResidual& model) {
    double total = 0.0;
    SVec<double> xrow(8);
    for (int s : idx) {
      for (int i = 0; i < 8; ++i) xrow[static_cast<size_t>(i)] = batch.x(s, i);
      for (int b : {0, 1}) {
        SVec<double> pred = model.eval_block<double>(b, xrow);
        for (int j = 0; j < 2; ++j) {
          const double e = batch.target(s, b * 2 + j) - pred[static_cast<size_t>(j)];
          total += e * e;
        }
      }
    }
    return total;
  };

  const Eigen::VectorXd analytic = grad(res, batch, idx);
  Eigen::VectorXd params = trainable_params(res);
  double worst = 0.0;
  const double h = 1e-5;
  for (Eigen::Index p = 0; p < params.size(); ++p) {
    LowerTriangularResidual pert = res;
    Eigen::VectorXd pp = params;
    pp[p] += h;
    set_trainable_params(pert, pp);
    const double up = batch_loss(pert);
    pp[p] -= 2 * h;
    set_trainable_params(pert, pp);
    const double dn = batch_loss(pert);
    const double numeric = (up - dn) / (2 * h);
    const double rel =
        std::abs(analytic[p] - numeric) / std::max(1.0, std::abs(numeric));
    worst = std::max(worst, rel);
  }
  return {"mlp-gradient", worst <= 1e-4, worst, 1e-4,
          "central differences over every parameter"};
}

SuiteResult triangularity_suite(const VerifyOptions& opts) {
  std::mt19937_64 rng(opts.seed ^ 0x444);
  LowerTriangularResidual res = random_mlp_residual(rng);
  std::uniform_real_distribution<double> box(-2.0, 2.0);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd x(8);
    for (int i = 0; i < 8; ++i) x[i] = box(rng);
    const Eigen::MatrixXd jac = jacobian(
        [&res](std::span<const Dual> in) {
          SVec<Dual> out(8, zero_like(in[0]));
          for (int b = 0; b < res.r; ++b) {
            SVec<Dual> d = res.eval_block<Dual>(b, in);
            for (int j = 0; j < res.m; ++j) out[static_cast<size_t>(b * res.m + j)] = d[static_cast<size_t>(j)];
          }
          return out;
        },
        x);
    for (int b = 0; b < res.r; ++b)
      for (int row = b * res.m; row < (b + 1) * res.m; ++row)
        for (int col = (b + 1) * res.m; col < 8; ++col)
          worst = std::max(worst, std::abs(jac(row, col)));
  }
  return {"triangular-jacobian-zeros", worst == 0.0, worst, 0.0,
          "entries above the block diagonal"};
}

SuiteResult closed_form_phi3_suite(const VerifyOptions& opts) {
  const QuadrotorParams quad;
  const PureFeedbackModel model = nominal_extended_model(quad, 0.1, opts.fault);
  const FlatnessDiffeomorphism diffeo =
      construct(model, exact_drag_residual(quad, /*linear_only=*/true));
  std::mt19937_64 rng(opts.seed ^ 0x555);
  std::uniform_real_distribution<double> box(-2.0, 2.0);
  double worst = 0.0;
  int used = 0;
  while (used < 100) {
    std::vector<Jet> y;
    double yv[2], yd[2], ydd[2];
    for (int j = 0; j < 2; ++j) {
      yv[j] = box(rng);
      yd[j] = box(rng);
      ydd[j] = box(rng);
    }
    const double w1 = ydd[0] + quad.c_linear / quad.mass * yd[0];
    const double w2 = ydd[1] + quad.g + quad.c_linear / quad.mass * yd[1];
    if (std::sqrt(w1 * w1 + w2 * w2) < 1.0) continue;  // keep thrust valid
    ++used;
    for (int j = 0; j < 2; ++j) {
      std::vector<double> derivs = {yd[j], ydd[j], 0.0};
      y.push_back(jet_lift(yv[j], derivs));
    }
    const Eigen::VectorXd x = state_from_flat(diffeo, y);
    const double F_closed = quad.mass * std::sqrt(w1 * w1 + w2 * w2);
    const double th_closed = std::atan2(-w1, w2);
    worst = std::max(worst, std::abs(x[4] - F_closed));
    worst = std::max(worst, std::abs(x[5] - th_closed));
  }
  return {"closed-form-phi3", worst <= 1e-9, worst, 1e-9,
          "recursion vs printed thrust/attitude map, 100 samples"};
}

SuiteResult dynamic_consistency_suite(const VerifyOptions& opts) {
  const QuadrotorParams quad;
  const PureFeedbackModel model = nominal_extended_model(quad, 0.1, opts.fault);
  std::mt19937_64 rng(opts.seed ^ 0x666);
  double worst = 0.0;
  for (const bool drag : {false, true}) {
    const LowerTriangularResidual res =
        drag ? exact_drag_residual(quad) : zero_residual(4, 2);
    const FlatnessDiffeomorphism diffeo = construct(model, res);
    for (const auto& ref : {make_circle(), make_lemniscate()}) {
      std::uniform_real_distribution<double> time(0.5, 13.5);
      for (int trial = 0; trial < 5; ++trial) {
        const double t = time(rng);
        const double h = 1e-5;
        const Eigen::VectorXd xm = state_from_flat(diffeo, ref.jets(t - h, 4));
        const Eigen::VectorXd xp = state_from_flat(diffeo, ref.jets(t + h, 4));
        const FlatEvaluation eval =
            state_and_input_from_flat(diffeo, ref.jets(t, 4));
        const Eigen::VectorXd xdot_fd = (xp - xm) / (2.0 * h);
        SVec<double> xu(eval.state.data(), eval.state.data() + 8);
        xu.insert(xu.end(), eval.input.data(), eval.input.data() + 2);
        const Eigen::VectorXd xdot_model =
            to_eigen(eval_augmented<double>(model, res, xu));
        worst = std::max(worst,
                         (xdot_fd - xdot_model).cwiseAbs().maxCoeff());
      }
    }
  }
  return {"dynamic-consistency", worst <= 1e-5, worst, 1e-5,
          "central-difference xdot vs augmented dynamics"};
}

SuiteResult controller_consistency_suite(const VerifyOptions& opts) {
  const QuadrotorParams quad;
  const PureFeedbackModel model = nominal_extended_model(quad, 0.1, opts.fault);
  double worst = 0.0;
  for (const bool drag : {false, true}) {
    const LowerTriangularResidual res =
        drag ? exact_drag_residual(quad) : zero_residual(4, 2);
    const FlatnessDiffeomorphism diffeo = construct(model, res);
    const Reference ref = make_circle();
    FlatTrackingController controller(diffeo, ref);
    for (int k = 0; k < 8; ++k) {
      const double t = 0.3 + 1.7 * k;
      const Eigen::VectorXd x = state_from_flat(diffeo, ref.jets(t, 4));
      const Eigen::VectorXd u_ctrl = flat_control_step(controller, x, t);
      const Eigen::VectorXd u_open = input_from_flat(diffeo, ref.jets(t, 4));
      worst = std::max(worst, (u_ctrl - u_open).cwiseAbs().maxCoeff());
    }
  }
  return {"controller-open-loop-consistency", worst <= 1e-10, worst, 1e-10,
          "on-reference inputs"};
}

SuiteResult nmpc_riccati_suite(const VerifyOptions&) {
  // Double integrator, quadratic cost on position and input.
  OcpDynamics dyn = make_ocp_dynamics(
      2, 1, []<SmoothScalar S>(std::span<const S> x, std::span<const S> u) {
        return SVec<S>{x[1], u[0]};
      });
  OcpConfig cfg;
  cfg.horizon = 1.0;
  cfg.steps = 40;
  cfg.flat_dim = 1;
  cfg.q_weight = 1.0;
  cfg.r_weight = 1e-3;
  cfg.qt_weight = 1.0;
  Eigen::VectorXd x0(2);
  x0 << 1.0, 0.0;
  auto zero_ref = [](double) { return Eigen::VectorXd::Zero(1); };
  const OcpSolution sol = solve_ocp(dyn, cfg, x0, zero_ref, 0.0);

  // Independent oracle: exact discrete maps + Riccati difference equation.
  const double dt = cfg.dt();
  Eigen::Matrix2d A;
  A << 1.0, dt, 0.0, 1.0;
  Eigen::Vector2d B;
  B << 0.5 * dt * dt, dt;
  const Eigen::Matrix2d Q =
      dt * cfg.q_weight * Eigen::Vector2d(1.0, 0.0).asDiagonal();
  const double R = dt * cfg.r_weight;
  Eigen::Matrix2d P = cfg.qt_weight * Eigen::Vector2d(1.0, 0.0).asDiagonal();
  std::vector<Eigen::RowVector2d> gains(static_cast<size_t>(cfg.steps));
  for (int k = cfg.steps - 1; k >= 0; --k) {
    const double s = R + (B.transpose() * P * B)(0, 0);
    const Eigen::RowVector2d K = (B.transpose() * P * A) / s;
    gains[static_cast<size_t>(k)] = K;
    P = Q + A.transpose() * P * (A - B * K);
  }
  Eigen::Vector2d x = x0;
  double worst = 0.0;
  for (int k = 0; k < cfg.steps; ++k) {
    const double u_star = -(gains[static_cast<size_t>(k)] * x)(0, 0);
    worst = std::max(worst, std::abs(sol.u(k, 0) - u_star));
    x = A * x + B * u_star;
  }
  return {"nmpc-vs-riccati", worst <= 1e-6 && sol.converged, worst, 1e-6,
          "double-integrator optimal inputs"};
}

SuiteResult roundtrip_suite(const VerifyOptions& opts) {
  const QuadrotorParams quad;
  const PureFeedbackModel model = nominal_extended_model(quad, 0.1, opts.fault);
  std::mt19937_64 rng(opts.seed ^ 0x777);
  std::uniform_real_distribution<double> box(-2.0, 2.0);
  std::uniform_real_distribution<double> thrust(5.0, 15.0);
  std::uniform_real_distribution<double> angle(-1.0, 1.0);
  double worst = 0.0;
  for (const bool drag : {false, true}) {
    const LowerTriangularResidual res =
        drag ? exact_drag_residual(quad) : zero_residual(4, 2);
    const FlatnessDiffeomorphism diffeo = construct(model, res);
    for (int trial = 0; trial < 50; ++trial) {
      Eigen::VectorXd x(8);
      x << box(rng), box(rng), box(rng), box(rng), thrust(rng), angle(rng),
          box(rng), box(rng);
      const std::vector<Jet> y = flat_derivatives_from_state(diffeo, x);
      const Eigen::VectorXd back = state_from_flat(diffeo, y);
      worst = std::max(worst, (back - x).cwiseAbs().maxCoeff());
    }
  }
  return {"flat-state-round-trip", worst <= 1e-8, worst, 1e-8,
          "state -> flat derivatives -> state"};
}

SuiteResult training_reproducibility_suite(const VerifyOptions& opts) {
  DataGenConfig data_cfg;
  data_cfg.n_trajectories = 20;
  data_cfg.seed = opts.seed;
  const Dataset ds = generate_training_data(data_cfg);
  const QuadrotorParams quad = data_cfg.quad;
  auto nominal = [quad](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    return nominal_plant_original(quad, x, u);
  };
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.seed = opts.seed + 7;
  const TrainResult a = train(ds, nominal, 4, 2, cfg);
  const TrainResult b = train(ds, nominal, 4, 2, cfg);
  const Eigen::VectorXd pa = trainable_params(a.residual);
  const Eigen::VectorXd pb = trainable_params(b.residual);
  bool identical = pa.size() == pb.size();
  if (identical)
    for (Eigen::Index i = 0; i < pa.size(); ++i)
      if (pa[i] != pb[i]) {
        identical = false;
        break;
      }
  return {"training-bitwise-reproducibility", identical,
          identical ? 0.0 : 1.0, 0.0, "two runs, one seed"};
}

SuiteResult simulation_reproducibility_suite(const VerifyOptions& opts) {
  const QuadrotorParams quad;
  const PureFeedbackModel model = nominal_extended_model(quad, 0.1, opts.fault);
  const FlatnessDiffeomorphism diffeo = construct(model, zero_residual(4, 2));
  const Reference ref = make_circle();
  auto plant = [quad](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    return true_plant_extended(quad, x, u);
  };
  auto run_once = [&]() {
    FlatTrackingController controller(diffeo, ref);
    ClosedLoopOptions options;
    options.T = 1.0;
    options.x0 = state_from_flat(
        construct(model, exact_drag_residual(quad)), ref.jets(0.0, 4));
    return closed_loop_run(
        plant,
        [&controller](const Eigen::VectorXd& x, double t) {
          return controller.step(x, t);
        },
        options);
  };
  const ClosedLoopResult a = run_once();
  const ClosedLoopResult b = run_once();
  bool identical = a.completed && b.completed && a.traj.x.size() == b.traj.x.size();
  if (identical)
    for (size_t k = 0; k < a.traj.x.size(); ++k)
      if (a.traj.x[k] != b.traj.x[k]) {
        identical = false;
        break;
      }
  return {"simulation-bitwise-reproducibility", identical,
          identical ? 0.0 : 1.0, 0.0, "two closed-loop runs"};
}

}  // namespace

VerifyReport run_verify(const VerifyOptions& opts) {
  VerifyReport report;
  report.suites.push_back(inverse_identity_suite(opts));
  report.suites.push_back(jet_chain_rule_suite(opts));
  report.suites.push_back(mlp_gradient_suite(opts));
  report.suites.push_back(triangularity_suite(opts));
  report.suites.push_back(closed_form_phi3_suite(opts));
  report.suites.push_back(dynamic_consistency_suite(opts));
  report.suites.push_back(controller_consistency_suite(opts));
  report.suites.push_back(nmpc_riccati_suite(opts));
  report.suites.push_back(roundtrip_suite(opts));
  report.suites.push_back(training_reproducibility_suite(opts));
  report.suites.push_back(simulation_reproducibility_suite(opts));
  return report;
}

}  // namespace flatres
