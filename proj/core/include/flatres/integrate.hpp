#pragma once

#include <Eigen/Core>
#include <cmath>
#include <span>

#include "flatres/errors.hpp"
#include "flatres/smooth.hpp"

namespace flatres {

/// Classical RK4 step with the input held constant over the step (zero-order
/// hold).  Throws DomainError on a non-finite result.
template <class F>
Eigen::VectorXd rk4_step(F&& f, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u, double dt) {
  const Eigen::VectorXd k1 = f(x, u);
  const Eigen::VectorXd k2 = f(x + 0.5 * dt * k1, u);
  const Eigen::VectorXd k3 = f(x + 0.5 * dt * k2, u);
  const Eigen::VectorXd k4 = f(x + dt * k3, u);
  Eigen::VectorXd out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!out.allFinite()) throw DomainError("rk4_step produced non-finite state");
  return out;
}

/// RK4 step for a time-varying vector field f(x, t); stages sample f at
/// t, t + dt/2, and t + dt.
template <class F>
Eigen::VectorXd rk4_step_tv(F&& f, const Eigen::VectorXd& x, double t,
                            double dt) {
  const Eigen::VectorXd k1 = f(x, t);
  const Eigen::VectorXd k2 = f(x + 0.5 * dt * k1, t + 0.5 * dt);
  const Eigen::VectorXd k3 = f(x + 0.5 * dt * k2, t + 0.5 * dt);
  const Eigen::VectorXd k4 = f(x + dt * k3, t + dt);
  Eigen::VectorXd out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!out.allFinite())
    throw DomainError("rk4_step_tv produced non-finite state");
  return out;
}

/// Generic-scalar RK4 (ZOH input), used to push dual seeds through the
/// discretized dynamics of the OCP transcription.
template <SmoothScalar S, class F>
SVec<S> rk4_step_generic(F&& f, std::span<const S> x, std::span<const S> u,
                         double dt) {
  const size_t n = x.size();
  auto axpy = [n](std::span<const S> base, double c, const SVec<S>& d) {
    SVec<S> out;
    out.reserve(n);
    for (size_t i = 0; i < n; ++i) out.push_back(base[i] + c * d[i]);
    return out;
  };
  const SVec<S> k1 = f(x, u);
  SVec<S> x2 = axpy(x, 0.5 * dt, k1);
  const SVec<S> k2 = f(std::span<const S>(x2), u);
  SVec<S> x3 = axpy(x, 0.5 * dt, k2);
  const SVec<S> k3 = f(std::span<const S>(x3), u);
  SVec<S> x4 = axpy(x, dt, k3);
  const SVec<S> k4 = f(std::span<const S>(x4), u);
  SVec<S> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i)
    out.push_back(x[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
  return out;
}

}  // namespace flatres
