#include <Eigen/Dense>
#include <random>

#include "doctest.h"
#include "flatres/flat_map.hpp"
#include "flatres/quadrotor2d.hpp"
#include "flatres/reference.hpp"
#include "flatres/sim_control.hpp"

using namespace flatres;

namespace {

// Independent hand-derived nominal flat map for the quadrotor: the h-maps
// composed and differentiated symbolically, used as the oracle for the
// zero-residual recursion.
struct HandFlatMap {
  Eigen::VectorXd state;
  Eigen::Vector2d input;
};

HandFlatMap nominal_flat_map_by_hand(const QuadrotorParams& p,
                                     const std::vector<Jet>& y) {
  Eigen::Vector2d pos(y[0].derivative(0), y[1].derivative(0));
  Eigen::Vector2d vel(y[0].derivative(1), y[1].derivative(1));
  Eigen::Vector2d acc(y[0].derivative(2), y[1].derivative(2));
  Eigen::Vector2d jerk(y[0].derivative(3), y[1].derivative(3));
  Eigen::Vector2d snap(y[0].derivative(4), y[1].derivative(4));

  const Eigen::Vector2d w(acc[0], acc[1] + p.g);
  const double rho = w.norm();
  const double F = p.mass * rho;
  const double theta = std::atan2(-w[0], w[1]);
  const double rho_dot = w.dot(jerk) / rho;
  const double Fdot = p.mass * rho_dot;
  const double omega = (-jerk[0] * w[1] + w[0] * jerk[1]) / (rho * rho);
  const double rho_ddot =
      (jerk.squaredNorm() + w.dot(snap)) / rho - std::pow(w.dot(jerk), 2) / std::pow(rho, 3);
  const double Fddot = p.mass * rho_ddot;
  const double theta_ddot =
      (w[0] * snap[1] - snap[0] * w[1]) / (rho * rho) -
      2.0 * (-jerk[0] * w[1] + w[0] * jerk[1]) * w.dot(jerk) / std::pow(rho, 4);

  HandFlatMap out;
  out.state.resize(8);
  out.state << pos, vel, F, theta, Fdot, omega;
  out.input << Fddot, p.inertia * theta_ddot;
  return out;
}

std::vector<Jet> random_y_jets(std::mt19937_64& rng, double accel_floor = 1.0) {
  std::uniform_real_distribution<double> coeff(-2.0, 2.0);
  for (;;) {
    std::vector<Jet> y;
    double a1 = coeff(rng), a2 = coeff(rng);
    const double w1 = a1, w2 = a2 + 9.81;
    if (std::sqrt(w1 * w1 + w2 * w2) < accel_floor || w2 < 0.5) continue;
    y.push_back(jet_lift(coeff(rng), {coeff(rng), a1, coeff(rng), coeff(rng)}));
    y.push_back(jet_lift(coeff(rng), {coeff(rng), a2, coeff(rng), coeff(rng)}));
    return y;
  }
}

}  // namespace

TEST_CASE("construct validates the block structure") {
  const PureFeedbackModel model = nominal_extended_model(QuadrotorParams{});
  CHECK_THROWS_AS(construct(model, zero_residual(3, 2)), std::invalid_argument);
  CHECK_THROWS_AS(construct(model, zero_residual(4, 1)), std::invalid_argument);
  CHECK_NOTHROW(construct(model, zero_residual(4, 2)));
}

TEST_CASE("constant flat output maps to hover") {
  const QuadrotorParams p;
  const PureFeedbackModel model = nominal_extended_model(p);
  std::vector<Jet> y = {Jet::constant(0.4, 4), Jet::constant(-1.2, 4)};

  for (const bool with_linear_drag : {false, true}) {
    const FlatnessDiffeomorphism diffeo = construct(
        model, with_linear_drag ? exact_drag_residual(p, /*linear_only=*/true)
                                : zero_residual(4, 2));
    const Eigen::VectorXd x = state_from_flat(diffeo, y);
    CHECK(x[0] == 0.4);
    CHECK(x[1] == -1.2);
    CHECK(x.segment<2>(2).cwiseAbs().maxCoeff() == 0.0);       // v = 0
    CHECK(x[4] == doctest::Approx(p.mass * p.g).epsilon(1e-15));  // F = mg
    CHECK(x[5] == 0.0);                                        // theta
    CHECK(x.tail<2>().cwiseAbs().maxCoeff() == 0.0);           // Fdot, omega
    const Eigen::VectorXd u = input_from_flat(diffeo, y);
    CHECK(u.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("zero-residual recursion equals the hand-coded nominal flat map") {
  const QuadrotorParams p;
  const FlatnessDiffeomorphism diffeo =
      construct(nominal_extended_model(p), zero_residual(4, 2));
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 100; ++trial) {
    const std::vector<Jet> y = random_y_jets(rng);
    const FlatEvaluation eval = state_and_input_from_flat(diffeo, y);
    const HandFlatMap oracle = nominal_flat_map_by_hand(p, y);
    CHECK((eval.state - oracle.state).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((eval.input - oracle.input).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("flat-output preservation: Phi_1 is the identity") {
  const QuadrotorParams p;
  const FlatnessDiffeomorphism diffeo =
      construct(nominal_extended_model(p), exact_drag_residual(p, true));
  std::mt19937_64 rng(59);
  const std::vector<Jet> y = random_y_jets(rng);
  const Eigen::VectorXd x = state_from_flat(diffeo, y);
  CHECK(x[0] == y[0].value());
  CHECK(x[1] == y[1].value());
}

TEST_CASE("linear-drag recursion matches the printed closed form") {
  const QuadrotorParams p;
  const FlatnessDiffeomorphism diffeo =
      construct(nominal_extended_model(p), exact_drag_residual(p, true));
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 100; ++trial) {
    const std::vector<Jet> y = random_y_jets(rng);
    const Eigen::VectorXd x = state_from_flat(diffeo, y);
    const double w1 = y[0].derivative(2) + p.c_linear / p.mass * y[0].derivative(1);
    const double w2 =
        y[1].derivative(2) + p.g + p.c_linear / p.mass * y[1].derivative(1);
    if (std::sqrt(w1 * w1 + w2 * w2) < 0.2) continue;
    CHECK(std::abs(x[4] - p.mass * std::sqrt(w1 * w1 + w2 * w2)) < 1e-9);
    CHECK(std::abs(x[5] - std::atan2(-w1, w2)) < 1e-9);
  }
}

TEST_CASE("circle at t=0 with linear drag: thrust from the closed form") {
  const QuadrotorParams p;
  const FlatnessDiffeomorphism diffeo =
      construct(nominal_extended_model(p), exact_drag_residual(p, true));
  const Reference circle = make_circle();
  const std::vector<Jet> y = circle.jets(0.0, 4);
  const Eigen::VectorXd x = state_from_flat(diffeo, y);
  const double cr = p.c_linear / p.mass;
  const double w1 = y[0].derivative(2) + cr * y[0].derivative(1);
  const double w2 = y[1].derivative(2) + p.g + cr * y[1].derivative(1);
  CHECK(std::abs(x[4] - p.mass * std::sqrt(w1 * w1 + w2 * w2)) < 1e-9);
}

TEST_CASE("domain violations carry the recursion level") {
  const QuadrotorParams p;
  const FlatnessDiffeomorphism diffeo =
      construct(nominal_extended_model(p), zero_residual(4, 2));
  // acceleration exactly cancelling gravity: h2 sees a zero-norm argument
  std::vector<Jet> y = {jet_lift(0.0, {0.0, 0.0, 0.3, 0.0}),
                        jet_lift(0.0, {0.0, -p.g, 0.0, 0.0})};
  try {
    state_from_flat(diffeo, y);
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(e.level() == 3);
  }
}

TEST_CASE("open-loop rollout under nominal dynamics tracks the circle") {
  const QuadrotorParams p;
  const PureFeedbackModel model = nominal_extended_model(p);
  const FlatnessDiffeomorphism diffeo = construct(model, zero_residual(4, 2));
  auto nominal_plant = [&model](const Eigen::VectorXd& x,
                                const Eigen::VectorXd& u) {
    return eval_dynamics(model, x, u);
  };
  const Reference circle = make_circle();
  const SimTrajectory traj =
      open_loop_rollout(nominal_plant, diffeo, circle, 1e-2, 14.0);
  CHECK(position_error(traj, circle) < 1e-5);
}

TEST_CASE("ground-truth residual rollout under true dynamics is exact") {
  const QuadrotorParams p;
  const FlatnessDiffeomorphism diffeo =
      construct(nominal_extended_model(p), exact_drag_residual(p));
  auto plant = [&p](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    return true_plant_extended(p, x, u);
  };
  const Reference circle = make_circle();
  const SimTrajectory traj = open_loop_rollout(plant, diffeo, circle, 1e-2, 14.0);
  CHECK(position_error(traj, circle) < 1e-4);
}

TEST_CASE("flat derivatives from a hover state vanish beyond the value") {
  const QuadrotorParams p;
  const FlatnessDiffeomorphism diffeo =
      construct(nominal_extended_model(p), zero_residual(4, 2));
  Eigen::VectorXd hover = Eigen::VectorXd::Zero(8);
  hover[0] = 1.0;
  hover[4] = p.mass * p.g;
  const std::vector<Jet> y = flat_derivatives_from_state(diffeo, hover);
  CHECK(y[0].value() == 1.0);
  for (int j = 0; j < 2; ++j)
    for (int k = 1; k <= 3; ++k) CHECK(y[static_cast<size_t>(j)].derivative(k) == 0.0);
}

TEST_CASE("second flat derivative equals the acceleration block") {
  const QuadrotorParams p;
  const FlatnessDiffeomorphism diffeo =
      construct(nominal_extended_model(p), zero_residual(4, 2));
  std::mt19937_64 rng(67);
  std::uniform_real_distribution<double> box(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd x(8);
    x << box(rng), box(rng), box(rng), box(rng), 9.0 + box(rng), 0.5 * box(rng),
        box(rng), box(rng);
    const std::vector<Jet> y = flat_derivatives_from_state(diffeo, x);
    const double ax = -x[4] * std::sin(x[5]) / p.mass;
    const double ay = x[4] * std::cos(x[5]) / p.mass - p.g;
    CHECK(y[0].derivative(2) == doctest::Approx(ax).epsilon(1e-12));
    CHECK(y[1].derivative(2) == doctest::Approx(ay).epsilon(1e-12));
    CHECK(y[0].derivative(1) == x[2]);
    CHECK(y[1].derivative(1) == x[3]);
  }
}

TEST_CASE("state -> flat derivatives -> state round trip") {
  const QuadrotorParams p;
  const PureFeedbackModel model = nominal_extended_model(p);
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> box(-2.0, 2.0);
  for (const bool drag : {false, true}) {
    const FlatnessDiffeomorphism diffeo = construct(
        model, drag ? exact_drag_residual(p) : zero_residual(4, 2));
    for (int trial = 0; trial < 30; ++trial) {
      Eigen::VectorXd x(8);
      x << box(rng), box(rng), 1.0 + box(rng), 1.0 + box(rng), 9.0 + box(rng),
          0.5 * box(rng), box(rng), box(rng);
      const std::vector<Jet> y = flat_derivatives_from_state(diffeo, x);
      const Eigen::VectorXd back = state_from_flat(diffeo, y);
      CHECK((back - x).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("evaluation is deterministic") {
  const QuadrotorParams p;
  const FlatnessDiffeomorphism diffeo =
      construct(nominal_extended_model(p), exact_drag_residual(p));
  const Reference circle = make_circle();
  const std::vector<Jet> y = circle.jets(3.7, 4);
  const FlatEvaluation a = state_and_input_from_flat(diffeo, y);
  const FlatEvaluation b = state_and_input_from_flat(diffeo, y);
  CHECK(a.state == b.state);
  CHECK(a.input == b.input);
}
