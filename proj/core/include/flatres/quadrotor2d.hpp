#pragma once

#include <Eigen/Core>
#include <functional>

#include "flatres/pure_feedback.hpp"
#include "flatres/residual.hpp"

namespace flatres {

/// Planar quadrotor constants (SI units).
struct QuadrotorParams {
  double mass = 1.0;        // kg
  double inertia = 0.1;     // kg m^2
  double g = 9.81;          // m/s^2
  double c_parasitic = 0.1; // fuselage drag, N s^2/m^2
  double c_linear = 0.01;   // rotor-style linear drag, N s/m
};

/// Original plant coordinates: x6 = (px, py, vx, vy, theta, omega),
/// inputs (F, tau).  theta is kept unwrapped during simulation.
///
/// Extended pure-feedback coordinates: x8 = (p, v, F, theta, Fdot, omega),
/// inputs (Fddot, tau); the thrust is dynamically extended twice.

enum class ModelFault {
  None,
  H2SignFlip,  // test hook: flips the sign of the attitude component of h2
};

/// Extended 8-state pure-feedback model (r = 4, m = 2) with the closed-form
/// inverse maps.  The validity predicate accepts F > thrust_min and
/// |theta| < pi.
PureFeedbackModel nominal_extended_model(const QuadrotorParams& p,
                                         double thrust_min = 0.1,
                                         ModelFault fault = ModelFault::None);

/// Drag residual entering the velocity block:
/// delta2(v) = -c_linear v - c_parasitic ||v|| v.
Eigen::Vector2d true_disturbance(const Eigen::Vector2d& v,
                                 const QuadrotorParams& p);

/// Extended nominal dynamics plus the drag residual in block 2.
Eigen::VectorXd true_plant_extended(const QuadrotorParams& p,
                                    const Eigen::VectorXd& x8,
                                    const Eigen::VectorXd& u2);

/// Original 6-state nominal dynamics, inputs (F, tau).
Eigen::VectorXd nominal_plant_original(const QuadrotorParams& p,
                                       const Eigen::VectorXd& x6,
                                       const Eigen::VectorXd& u2);

/// Original 6-state dynamics with the drag residual added to vdot.
Eigen::VectorXd true_plant_original(const QuadrotorParams& p,
                                    const Eigen::VectorXd& x6,
                                    const Eigen::VectorXd& u2);

/// Coordinate bridges between the 6-state plant and the 8-state extended
/// model.  project_state(extend_state(x6, F, Fdot)) recovers all fields.
Eigen::VectorXd extend_state(const Eigen::VectorXd& x6, double F, double Fdot);

struct ProjectedState {
  Eigen::VectorXd x6;
  double F = 0.0;
  double Fdot = 0.0;
};
ProjectedState project_state(const Eigen::VectorXd& x8);

/// Ground-truth residual as exact closures on the extended model: block 2
/// carries the drag law, all other blocks are zero.  With linear_only the
/// parasitic term is dropped (the closed-form running example).
LowerTriangularResidual exact_drag_residual(const QuadrotorParams& p,
                                            bool linear_only = false);

}  // namespace flatres
