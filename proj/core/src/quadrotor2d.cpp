#include "flatres/quadrotor2d.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace flatres {

PureFeedbackModel nominal_extended_model(const QuadrotorParams& p,
                                         double thrust_min, ModelFault fault) {
  PureFeedbackModel model;
  model.r = 4;
  model.m = 2;

  // xdot_1 = x_2
  model.f.push_back(make_block([]<SmoothScalar S>(std::span<const S> in) {
    return SVec<S>{in[2], in[3]};
  }));
  // xdot_2 = ((-F sin th)/m, (F cos th)/m - g)
  model.f.push_back(
      make_block([m = p.mass, g = p.g]<SmoothScalar S>(std::span<const S> in) {
        const S& F = in[4];
        const S& th = in[5];
        return SVec<S>{-(F * sin(th)) / m, (F * cos(th)) / m - g};
      }));
  // xdot_3 = x_4
  model.f.push_back(make_block([]<SmoothScalar S>(std::span<const S> in) {
    return SVec<S>{in[6], in[7]};
  }));
  // xdot_4 = (Fddot, tau / I)
  model.f.push_back(
      make_block([I = p.inertia]<SmoothScalar S>(std::span<const S> in) {
        return SVec<S>{in[8], in[9] / I};
      }));

  // h_1(x_1, c) = c
  model.h.push_back(make_block([]<SmoothScalar S>(std::span<const S> in) {
    return SVec<S>{in[2], in[3]};
  }));
  // h_2(x_1, x_2, c) = (m sqrt(c0^2 + (c1+g)^2), atan2(-c0, c1+g))
  const double theta_sign = fault == ModelFault::H2SignFlip ? 1.0 : -1.0;
  model.h.push_back(make_block(
      [m = p.mass, g = p.g, theta_sign]<SmoothScalar S>(std::span<const S> in) {
        const S& c0 = in[4];
        const S w = in[5] + g;
        return SVec<S>{m * sqrt(c0 * c0 + w * w), atan2(theta_sign * c0, w)};
      }));
  // h_3(x_1..x_3, c) = c
  model.h.push_back(make_block([]<SmoothScalar S>(std::span<const S> in) {
    return SVec<S>{in[6], in[7]};
  }));
  // h_4(x_1..x_4, c) = (c0, I c1)
  model.h.push_back(
      make_block([I = p.inertia]<SmoothScalar S>(std::span<const S> in) {
        return SVec<S>{in[8], I * in[9]};
      }));

  model.validity = [thrust_min](const Eigen::VectorXd& x,
                                const Eigen::VectorXd&) {
    return x[4] > thrust_min && std::abs(x[5]) < std::numbers::pi;
  };
  return model;
}

Eigen::Vector2d true_disturbance(const Eigen::Vector2d& v,
                                 const QuadrotorParams& p) {
  return -p.c_linear * v - p.c_parasitic * v.norm() * v;
}

Eigen::VectorXd true_plant_extended(const QuadrotorParams& p,
                                    const Eigen::VectorXd& x8,
                                    const Eigen::VectorXd& u2) {
  if (x8.size() != 8 || u2.size() != 2)
    throw std::invalid_argument("true_plant_extended: dimension mismatch");
  const double F = x8[4], th = x8[5];
  Eigen::VectorXd dx(8);
  dx[0] = x8[2];
  dx[1] = x8[3];
  dx[2] = -(F * std::sin(th)) / p.mass;
  dx[3] = (F * std::cos(th)) / p.mass - p.g;
  dx.segment<2>(2) += true_disturbance(x8.segment<2>(2), p);
  dx[4] = x8[6];
  dx[5] = x8[7];
  dx[6] = u2[0];
  dx[7] = u2[1] / p.inertia;
  return dx;
}

Eigen::VectorXd nominal_plant_original(const QuadrotorParams& p,
                                       const Eigen::VectorXd& x6,
                                       const Eigen::VectorXd& u2) {
  if (x6.size() != 6 || u2.size() != 2)
    throw std::invalid_argument("nominal_plant_original: dimension mismatch");
  const double F = u2[0], th = x6[4];
  Eigen::VectorXd dx(6);
  dx[0] = x6[2];
  dx[1] = x6[3];
  dx[2] = -(F * std::sin(th)) / p.mass;
  dx[3] = (F * std::cos(th)) / p.mass - p.g;
  dx[4] = x6[5];
  dx[5] = u2[1] / p.inertia;
  return dx;
}

Eigen::VectorXd true_plant_original(const QuadrotorParams& p,
                                    const Eigen::VectorXd& x6,
                                    const Eigen::VectorXd& u2) {
  Eigen::VectorXd dx = nominal_plant_original(p, x6, u2);
  dx.segment<2>(2) += true_disturbance(x6.segment<2>(2), p);
  return dx;
}

Eigen::VectorXd extend_state(const Eigen::VectorXd& x6, double F, double Fdot) {
  if (x6.size() != 6) throw std::invalid_argument("extend_state: need 6 states");
  Eigen::VectorXd x8(8);
  x8 << x6[0], x6[1], x6[2], x6[3], F, x6[4], Fdot, x6[5];
  return x8;
}

ProjectedState project_state(const Eigen::VectorXd& x8) {
  if (x8.size() != 8) throw std::invalid_argument("project_state: need 8 states");
  ProjectedState out;
  out.x6.resize(6);
  out.x6 << x8[0], x8[1], x8[2], x8[3], x8[5], x8[7];
  out.F = x8[4];
  out.Fdot = x8[6];
  return out;
}

LowerTriangularResidual exact_drag_residual(const QuadrotorParams& p,
                                            bool linear_only) {
  LowerTriangularResidual res = zero_residual(4, 2);
  auto& blk = res.blocks[1];
  blk.kind = LowerTriangularResidual::BlockKind::Exact;
  blk.enabled = true;
  if (linear_only) {
    blk.exact = make_block(
        [c = p.c_linear / p.mass]<SmoothScalar S>(std::span<const S> in) {
          return SVec<S>{-c * in[2], -c * in[3]};
        });
  } else {
    blk.exact = make_block([cr = p.c_linear, cp = p.c_parasitic]<SmoothScalar S>(
                               std::span<const S> in) {
      const S& vx = in[2];
      const S& vy = in[3];
      const S speed = sqrt(vx * vx + vy * vy);
      return SVec<S>{-cr * vx - cp * speed * vx, -cr * vy - cp * speed * vy};
    });
  }
  return res;
}

}  // namespace flatres
