#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "doctest.h"
#include "flatres/dual.hpp"
#include "flatres/fd.hpp"
#include "flatres/quadrotor2d.hpp"
#include "flatres/smooth.hpp"

using namespace flatres;

TEST_CASE("jacobian of a linear map is exact") {
  Eigen::MatrixXd A(3, 4);
  A << 1, 2, 3, 4, -1, 0.5, 2, -3, 0, 7, -2, 1;
  auto f = [&A](std::span<const Dual> x) {
    SVec<Dual> out;
    for (int i = 0; i < 3; ++i) {
      Dual acc = A(i, 0) * x[0];
      for (int j = 1; j < 4; ++j) acc = acc + A(i, j) * x[static_cast<size_t>(j)];
      out.push_back(acc);
    }
    return out;
  };
  const Eigen::VectorXd x = Eigen::VectorXd::Random(4);
  const Eigen::MatrixXd J = jacobian(f, x);
  CHECK((J - A).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("quadrotor thrust-block jacobian determinant is F/m^2") {
  const QuadrotorParams p;
  const PureFeedbackModel model = nominal_extended_model(p);
  Eigen::VectorXd x(8), u(2);
  x << 0.3, -0.2, 1.0, 2.0, 9.81, 0.4, 0.1, -0.3;
  u << 0.0, 0.0;
  const auto report = check_regularity(model, x, u, 1e-6);
  CHECK(report.det_magnitude[1] ==
        doctest::Approx(x[4] / (p.mass * p.mass)).epsilon(1e-12));
}

TEST_CASE("jacobian matches central finite differences on a smooth map") {
  auto generic = []<SmoothScalar S>(std::span<const S> x) {
    using flatres::sin, flatres::cos, flatres::sqrt, flatres::exp,
        flatres::erf, flatres::atan2;
    return SVec<S>{sin(x[0]) * x[1] + exp(0.3 * x[2]),
                   atan2(x[1], x[2] + 4.0) - sqrt(x[0] * x[0] + 1.0),
                   erf(x[0] * 0.5) * cos(x[1])};
  };
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> box(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd x(3);
    x << box(rng), box(rng), box(rng);
    const Eigen::MatrixXd J =
        jacobian([&](std::span<const Dual> in) { return generic(in); }, x);
    for (int row = 0; row < 3; ++row)
      for (int col = 0; col < 3; ++col) {
        auto slice = [&](double h) {
          Eigen::VectorXd xp = x;
          xp[col] += h;
          SVec<double> xv(xp.data(), xp.data() + 3);
          return generic(std::span<const double>(xv))[static_cast<size_t>(row)];
        };
        const double numeric = (slice(1e-6) - slice(-1e-6)) / 2e-6;
        CHECK(std::abs(J(row, col) - numeric) < 1e-5);
      }
  }
}

TEST_CASE("jacobian chunks seeds wider than the dual capacity") {
  const int n = kMaxDualWidth + 5;
  auto f = [n](std::span<const Dual> x) {
    SVec<Dual> out;
    Dual sum = x[0];
    for (int i = 1; i < n; ++i) sum = sum + (i + 1.0) * x[static_cast<size_t>(i)];
    out.push_back(sum);
    return out;
  };
  const Eigen::VectorXd x = Eigen::VectorXd::Random(n);
  const Eigen::MatrixXd J = jacobian(f, x);
  CHECK(J.rows() == 1);
  CHECK(J.cols() == n);
  for (int i = 0; i < n; ++i) CHECK(J(0, i) == doctest::Approx(i + 1.0));
}

TEST_CASE("dual value slots match plain evaluation bit for bit") {
  auto program = [](auto x, auto y) {
    using flatres::sqrt, flatres::cos, flatres::atan2;
    return sqrt(x * x + 2.0) / (cos(y) + 3.0) + atan2(x, y + 5.0);
  };
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> box(-1.5, 1.5);
  for (int trial = 0; trial < 100; ++trial) {
    const double x = box(rng), y = box(rng);
    const Dual dx = Dual::seeded(x, 2, 0);
    const Dual dy = Dual::seeded(y, 2, 1);
    CHECK(program(dx, dy).value() == program(x, y));
  }
}

TEST_CASE("seed propagation composes to first order") {
  // After g, the perturbation block equals Dg(value) * seed.
  Eigen::MatrixXd seed(2, 3);
  seed << 1, 2, 0, 0.5, -1, 3;
  Eigen::VectorXd x(2);
  x << 0.7, -0.4;
  DualVector duals = make_duals(x, seed);
  const Dual out = sin(duals[0]) * duals[1];
  // Dg = [cos(x0) * x1, sin(x0)]
  const Eigen::RowVector2d dg(std::cos(x[0]) * x[1], std::sin(x[0]));
  const Eigen::RowVector3d expected = dg * seed;
  for (int j = 0; j < 3; ++j)
    CHECK(out.deriv(j) == doctest::Approx(expected[j]).epsilon(1e-14));
}
