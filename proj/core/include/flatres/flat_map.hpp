#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "flatres/pure_feedback.hpp"
#include "flatres/residual.hpp"

namespace flatres {

/// Flatness diffeomorphism of the residual-augmented system, evaluated by
/// running the inverse-map recursion in jet arithmetic:
///
///   Phi_1 = y,
///   Phi_k = h_{k-1}(Phi_1, ..., Phi_{k-1},
///                   d/dt Phi_{k-1} - Delta_{k-1}(Phi_1, ..., Phi_{k-1})),
///
/// where d/dt Phi_{k-1} is read off the jet coefficients, so the chain-rule
/// product with the stacked flat-output derivatives never has to be formed
/// explicitly.  Level r yields the state, level r+1 the input.
struct FlatnessDiffeomorphism {
  PureFeedbackModel model;
  LowerTriangularResidual residual;

  int flat_dim() const { return model.m; }
  /// Derivative order of y needed to recover the state (input needs one more).
  int state_order() const { return model.r - 1; }
};

/// Structural validation only; no numerical work happens here.
FlatnessDiffeomorphism construct(PureFeedbackModel model,
                                 LowerTriangularResidual residual);

/// x = Phi(y, ..., y^(r-1)).  y_jets holds m jets of order >= r-1.  Throws
/// DomainError (carrying the recursion level) when an intermediate map
/// leaves its domain, and checks the model validity predicate on the result.
Eigen::VectorXd state_from_flat(const FlatnessDiffeomorphism& diffeo,
                                std::span<const Jet> y_jets);

/// u = Psi(y, ..., y^(r)).  Requires jets of order >= r.
Eigen::VectorXd input_from_flat(const FlatnessDiffeomorphism& diffeo,
                                std::span<const Jet> y_jets);

/// Both in one recursion pass (the open-loop planner wants x(0) and u(t)).
struct FlatEvaluation {
  Eigen::VectorXd state;
  Eigen::VectorXd input;
};
FlatEvaluation state_and_input_from_flat(const FlatnessDiffeomorphism& diffeo,
                                         std::span<const Jet> y_jets);

/// Algebraic reconstruction of (y, ydot, ..., y^(r-1)) from a state: seeds
/// every coordinate as an order-0 jet and repeatedly extends with the
/// augmented dynamics; r-1 is the highest derivative independent of u.
std::vector<Jet> flat_derivatives_from_state(
    const FlatnessDiffeomorphism& diffeo, const Eigen::VectorXd& x);

}  // namespace flatres
