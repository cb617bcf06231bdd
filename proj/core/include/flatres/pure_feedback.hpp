#pragma once

#include <Eigen/Core>
#include <functional>
#include <span>
#include <vector>

#include "flatres/smooth.hpp"

namespace flatres {

/// Plain (non-generic) dynamics function xdot = f(x, u), the shape shared by
/// plants, integrators, and target extraction.
using PlantFn =
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

template <SmoothScalar S>
using BlockFn = std::function<SVec<S>(std::span<const S>)>;

/// One smooth map instantiated for all scalar carriers, so a single generic
/// definition serves simulation (double), the flat-map recursion (Jet), and
/// Jacobians (Dual).  Inputs arrive as one flat span of stacked sub-states.
struct GenericBlock {
  BlockFn<double> on_real;
  BlockFn<Jet> on_jet;
  BlockFn<Dual> on_dual;

  explicit operator bool() const { return static_cast<bool>(on_real); }

  template <SmoothScalar S>
  const BlockFn<S>& fn() const {
    if constexpr (std::same_as<S, double>)
      return on_real;
    else if constexpr (std::same_as<S, Jet>)
      return on_jet;
    else
      return on_dual;
  }
};

template <class F>
GenericBlock make_block(F f) {
  GenericBlock b;
  b.on_real = [f](std::span<const double> in) { return f(in); };
  b.on_jet = [f](std::span<const Jet> in) { return f(in); };
  b.on_dual = [f](std::span<const Dual> in) { return f(in); };
  return b;
}

/// Pure-feedback-form nominal model
///   xdot_i = f_i(x_1, ..., x_{i+1}),  i = 1..r,  x_{r+1} := u,
/// with the known inverse maps h_k satisfying
///   h_k(x_1, ..., x_k, f_k(x_1, ..., x_{k+1})) = x_{k+1}
/// on the validity region.  All sub-states and the input share width m.
/// Blocks are stored 0-based: f[i] consumes the first (i+2)*m entries of the
/// stacked (x, u) vector, h[i] consumes (x_1..x_{i+1}, c) = (i+2)*m entries.
struct PureFeedbackModel {
  int r = 0;
  int m = 0;
  std::vector<GenericBlock> f;
  std::vector<GenericBlock> h;
  std::function<bool(const Eigen::VectorXd& x, const Eigen::VectorXd& u)>
      validity;

  int state_dim() const { return r * m; }
  int input_dim() const { return m; }
};

/// Stacks f_i(x_1..x_{i+1}) for i = 1..r.  Throws on dimension mismatch or
/// when the validity predicate rejects (x, u).
Eigen::VectorXd eval_dynamics(const PureFeedbackModel& model,
                              const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u);

/// Same stacking for any scalar carrier, no validity check (hot path for
/// integrators and the OCP transcription).  `xu` holds the stacked state
/// followed by the input.
template <SmoothScalar S>
SVec<S> eval_blocks(const PureFeedbackModel& model, std::span<const S> xu) {
  SVec<S> out;
  out.reserve(static_cast<size_t>(model.state_dim()));
  for (int i = 0; i < model.r; ++i) {
    SVec<S> bi = model.f[static_cast<size_t>(i)].template fn<S>()(
        xu.subspan(0, static_cast<size_t>((i + 2) * model.m)));
    out.insert(out.end(), bi.begin(), bi.end());
  }
  return out;
}

struct RegularityReport {
  std::vector<double> det_magnitude;  // |det D_{x_{i+1}} f_i|, one per block
  std::vector<bool> pass;
  bool all_pass = false;
};

/// Checks Assumption-2 style regularity: every partial Jacobian of block i
/// with respect to its newest argument must have |det| > tol.
RegularityReport check_regularity(const PureFeedbackModel& model,
                                  const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& u, double tol);

struct InverseIdentityReport {
  std::vector<double> max_violation;  // per block, inf-norm
  double overall = 0.0;
  int samples = 0;
};

/// Evaluates h_k(x_1..x_k, f_k(x_1..x_{k+1})) - x_{k+1} over the samples and
/// reports the worst violation per block.  Violations are reported, not
/// thrown.
InverseIdentityReport verify_inverse_identity(
    const PureFeedbackModel& model,
    const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& samples);

}  // namespace flatres
