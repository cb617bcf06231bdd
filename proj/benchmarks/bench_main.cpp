#include <benchmark/benchmark.h>

#include <random>

#include "flatres/flat_map.hpp"
#include "flatres/integrate.hpp"
#include "flatres/nmpc.hpp"
#include "flatres/quadrotor2d.hpp"
#include "flatres/reference.hpp"
#include "flatres/sim_control.hpp"

namespace {

using namespace flatres;

LowerTriangularResidual small_mlp_residual() {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> w(-0.3, 0.3);
  LowerTriangularResidual res = zero_residual(4, 2);
  for (int b : {0, 1}) {
    auto& blk = res.blocks[static_cast<size_t>(b)];
    blk.kind = LowerTriangularResidual::BlockKind::Mlp;
    blk.enabled = true;
    blk.mlp = make_mlp((b + 1) * 2, 2, 32);
    for (Eigen::Index i = 0; i < blk.mlp.w1.size(); ++i) blk.mlp.w1.data()[i] = w(rng);
    for (Eigen::Index i = 0; i < blk.mlp.w2.size(); ++i) blk.mlp.w2.data()[i] = w(rng);
  }
  return res;
}

void BM_JetProduct(benchmark::State& state) {
  const Jet a = jet_lift(1.3, {0.2, -0.4, 0.7, 0.1});
  const Jet b = jet_lift(-0.8, {1.2, 0.3, -0.5, 0.9});
  for (auto _ : state) {
    Jet c = a * b;
    benchmark::DoNotOptimize(c);
  }
}
BENCHMARK(BM_JetProduct);

void BM_MlpJetForward(benchmark::State& state) {
  const LowerTriangularResidual res = small_mlp_residual();
  SVec<Jet> x;
  for (int i = 0; i < 4; ++i)
    x.push_back(jet_lift(0.1 * i, {0.3, -0.2, 0.5, 0.1}));
  for (auto _ : state) {
    SVec<Jet> out = res.eval_block<Jet>(1, x);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_MlpJetForward);

void BM_StateFromFlat(benchmark::State& state) {
  const FlatnessDiffeomorphism diffeo = construct(
      nominal_extended_model(QuadrotorParams{}), small_mlp_residual());
  const Reference circle = make_circle();
  const std::vector<Jet> y = circle.jets(1.0, 4);
  for (auto _ : state) {
    Eigen::VectorXd x = state_from_flat(diffeo, y);
    benchmark::DoNotOptimize(x);
  }
}
BENCHMARK(BM_StateFromFlat);

void BM_FlatControlStep(benchmark::State& state) {
  const FlatnessDiffeomorphism diffeo = construct(
      nominal_extended_model(QuadrotorParams{}), small_mlp_residual());
  const Reference circle = make_circle();
  FlatTrackingController controller(diffeo, circle);
  const Eigen::VectorXd x = state_from_flat(diffeo, circle.jets(0.5, 4));
  for (auto _ : state) {
    Eigen::VectorXd u = controller.step(x, 0.5);
    benchmark::DoNotOptimize(u);
  }
}
BENCHMARK(BM_FlatControlStep);

void BM_QuadrotorRk4Substep(benchmark::State& state) {
  const QuadrotorParams p;
  auto plant = [&p](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    return true_plant_extended(p, x, u);
  };
  Eigen::VectorXd x = Eigen::VectorXd::Zero(8);
  x[4] = 9.81;
  const Eigen::Vector2d u(0.01, 0.002);
  for (auto _ : state) {
    x = rk4_step(plant, x, u, 1e-3);
    benchmark::DoNotOptimize(x);
    x[4] = 9.81;  // keep thrust in range across iterations
  }
}
BENCHMARK(BM_QuadrotorRk4Substep);

void BM_NmpcWarmStep(benchmark::State& state) {
  const PureFeedbackModel model = nominal_extended_model(QuadrotorParams{});
  const LowerTriangularResidual res = small_mlp_residual();
  OcpDynamics dyn = make_ocp_dynamics(
      8, 2,
      [model, res]<SmoothScalar S>(std::span<const S> x, std::span<const S> u) {
        SVec<S> xu(x.begin(), x.end());
        xu.insert(xu.end(), u.begin(), u.end());
        return eval_augmented<S>(model, res, xu);
      });
  OcpConfig cfg;
  cfg.flat_dim = 2;
  const FlatnessDiffeomorphism diffeo = construct(model, res);
  const Reference circle = make_circle();
  auto y_ref = [&circle](double t) { return Eigen::VectorXd(circle.position(t)); };
  auto init = [&diffeo, &circle](double t) {
    const FlatEvaluation eval = state_and_input_from_flat(diffeo, circle.jets(t, 4));
    return std::make_pair(eval.state, eval.input);
  };
  MpcController mpc(dyn, cfg, y_ref, init);
  const Eigen::VectorXd x0 = state_from_flat(diffeo, circle.jets(0.0, 4));
  mpc.step(x0, 0.0);  // prime the warm start
  double t = 0.01;
  for (auto _ : state) {
    Eigen::VectorXd u = mpc.step(x0, t);
    benchmark::DoNotOptimize(u);
    t += 0.01;
  }
}
BENCHMARK(BM_NmpcWarmStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
