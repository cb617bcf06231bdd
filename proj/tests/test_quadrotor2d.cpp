#include <Eigen/Dense>
#include <random>

#include "doctest.h"
#include "flatres/integrate.hpp"
#include "flatres/quadrotor2d.hpp"

using namespace flatres;

TEST_CASE("h2 at zero acceleration returns hover thrust and level attitude") {
  const QuadrotorParams p;
  const PureFeedbackModel model = nominal_extended_model(p);
  SVec<double> args = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};  // (x1, x2, c = 0)
  const SVec<double> out = model.h[1].on_real(std::span<const double>(args));
  CHECK(out[0] == doctest::Approx(9.81).epsilon(1e-15));
  CHECK(out[1] == 0.0);
}

TEST_CASE("true disturbance values from the drag law") {
  const QuadrotorParams p;
  CHECK(true_disturbance({0.0, 0.0}, p).norm() == 0.0);
  const Eigen::Vector2d d1 = true_disturbance({1.0, 0.0}, p);
  CHECK(d1[0] == doctest::Approx(-0.11).epsilon(1e-12));
  CHECK(d1[1] == 0.0);
  const Eigen::Vector2d d2 = true_disturbance({0.0, -2.0}, p);
  CHECK(d2[0] == 0.0);
  CHECK(d2[1] == doctest::Approx(0.42).epsilon(1e-12));
}

TEST_CASE("true extended plant composes nominal dynamics and drag") {
  const QuadrotorParams p;
  const PureFeedbackModel model = nominal_extended_model(p);

  // hover with drag: still an equilibrium
  Eigen::VectorXd hover = Eigen::VectorXd::Zero(8);
  hover[4] = p.mass * p.g;
  CHECK(true_plant_extended(p, hover, Eigen::Vector2d::Zero())
            .cwiseAbs()
            .maxCoeff() == 0.0);

  // drag-free parameters reduce to the nominal dynamics
  QuadrotorParams no_drag = p;
  no_drag.c_linear = no_drag.c_parasitic = 0.0;
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> box(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd x(8), u(2);
    x << box(rng), box(rng), box(rng), box(rng), 9.0 + box(rng), 0.3 * box(rng),
        box(rng), box(rng);
    u << box(rng), box(rng);
    CHECK((true_plant_extended(no_drag, x, u) - eval_dynamics(model, x, u))
              .cwiseAbs()
              .maxCoeff() < 1e-14);
    // with drag: nominal + stacked disturbance
    Eigen::VectorXd expected = eval_dynamics(model, x, u);
    expected.segment<2>(2) += true_disturbance(x.segment<2>(2), p);
    CHECK((true_plant_extended(p, x, u) - expected).cwiseAbs().maxCoeff() <
          1e-14);
  }
}

TEST_CASE("original plant agrees with the extended plant on shared coordinates") {
  const QuadrotorParams p;
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> box(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd x6(6);
    x6 << box(rng), box(rng), box(rng), box(rng), 0.3 * box(rng), box(rng);
    const double F = 9.0 + box(rng);
    Eigen::Vector2d u_orig(F, box(rng));

    const Eigen::VectorXd dx6 = true_plant_original(p, x6, u_orig);
    // Fdot = 0 and Fddot = 0 freezes the thrust extension.
    const Eigen::VectorXd x8 = extend_state(x6, F, 0.0);
    const Eigen::VectorXd dx8 =
        true_plant_extended(p, x8, Eigen::Vector2d(0.0, u_orig[1]));
    CHECK((dx6.head<4>() - dx8.head<4>()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(dx6[4] == dx8[5]);  // thetadot
    CHECK(dx6[5] == dx8[7]);  // omegadot
  }
}

TEST_CASE("state extension and projection round trip") {
  Eigen::VectorXd x6(6);
  x6 << 1, 2, 3, 4, 0.5, -0.25;
  const Eigen::VectorXd x8 = extend_state(x6, 9.81, 0.125);
  const ProjectedState back = project_state(x8);
  CHECK((back.x6 - x6).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.F == 9.81);
  CHECK(back.Fdot == 0.125);
  CHECK(x8[4] == 9.81);
  CHECK(x8[5] == 0.5);

  // projection of an arbitrary extended state keeps the shared fields
  Eigen::VectorXd any8(8);
  any8 << 1, 2, 3, 4, 5, 6, 7, 8;
  const ProjectedState ps = project_state(any8);
  CHECK((extend_state(ps.x6, ps.F, ps.Fdot) - any8).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("h2 singularity approaches zero determinant linearly in F") {
  const QuadrotorParams p;
  const PureFeedbackModel model = nominal_extended_model(p, 1e-6);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(8);
  Eigen::Vector2d u = Eigen::Vector2d::Zero();
  for (double F : {1.0, 0.5, 0.25, 0.1, 0.05}) {
    x[4] = F;
    const auto report = check_regularity(model, x, u, 0.0);
    CHECK(report.det_magnitude[1] ==
          doctest::Approx(F / (p.mass * p.mass)).epsilon(1e-9));
  }
}

TEST_CASE("ballistic flight conserves mechanical energy under RK4") {
  QuadrotorParams p;
  p.c_linear = p.c_parasitic = 0.0;
  Eigen::VectorXd x6(6);
  x6 << 0.0, 0.0, 1.5, 2.0, 0.2, 0.3;  // free fall with F = 0
  const Eigen::Vector2d u(0.0, 0.0);
  auto energy = [&p](const Eigen::VectorXd& x) {
    return 0.5 * x.segment<2>(2).squaredNorm() + p.g * x[1];
  };
  const double e0 = energy(x6);
  auto plant = [&p](const Eigen::VectorXd& x, const Eigen::VectorXd& uu) {
    return true_plant_original(p, x, uu);
  };
  for (int k = 0; k < 1000; ++k) x6 = rk4_step(plant, x6, u, 1e-3);
  CHECK(std::abs(energy(x6) - e0) < 1e-6);
}
