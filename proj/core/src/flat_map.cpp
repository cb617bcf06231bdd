#include "flatres/flat_map.hpp"

#include <stdexcept>

#include "flatres/errors.hpp"

namespace flatres {

FlatnessDiffeomorphism construct(PureFeedbackModel model,
                                 LowerTriangularResidual residual) {
  if (residual.r != model.r || residual.m != model.m)
    throw std::invalid_argument(
        "construct: residual block structure does not match the model");
  if (static_cast<int>(model.f.size()) != model.r ||
      static_cast<int>(model.h.size()) != model.r)
    throw std::invalid_argument("construct: model is missing blocks");
  return FlatnessDiffeomorphism{std::move(model), std::move(residual)};
}

namespace {

// Runs the recursion up to `levels` (r for the state, r+1 for the input).
// Returns one SVec<Jet> per level; level k has jet order K - k + 1.
std::vector<SVec<Jet>> recurse(const FlatnessDiffeomorphism& diffeo,
                               std::span<const Jet> y_jets, int levels) {
  const auto& model = diffeo.model;
  const int m = model.m;
  if (static_cast<int>(y_jets.size()) != m)
    throw std::invalid_argument("flat map: wrong number of flat-output jets");
  const int order = y_jets[0].order();
  for (const Jet& j : y_jets)
    if (j.order() != order)
      throw std::invalid_argument("flat map: jets must share one order");
  if (order < levels - 1)
    throw std::invalid_argument("flat map: jet order too low for this level");

  std::vector<SVec<Jet>> phi;
  phi.reserve(static_cast<size_t>(levels));
  phi.emplace_back(y_jets.begin(), y_jets.end());

  SVec<Jet> prefix(y_jets.begin(), y_jets.end());  // stacked Phi_1..Phi_{k-1}
  for (int k = 2; k <= levels; ++k) {
    try {
      const SVec<Jet>& prev = phi.back();
      SVec<Jet> c;
      c.reserve(static_cast<size_t>(m));
      if (diffeo.residual.block_active(k - 2)) {
        SVec<Jet> delta = diffeo.residual.eval_block<Jet>(
            k - 2, std::span<const Jet>(prefix));
        for (int j = 0; j < m; ++j)
          c.push_back(time_derivative(prev[static_cast<size_t>(j)]) -
                      delta[static_cast<size_t>(j)]);
      } else {
        for (int j = 0; j < m; ++j)
          c.push_back(time_derivative(prev[static_cast<size_t>(j)]));
      }
      SVec<Jet> args = prefix;
      args.insert(args.end(), c.begin(), c.end());
      SVec<Jet> next = model.h[static_cast<size_t>(k - 2)].on_jet(
          std::span<const Jet>(args));
      prefix.insert(prefix.end(), next.begin(), next.end());
      phi.push_back(std::move(next));
    } catch (const DomainError& e) {
      throw DomainError(std::string("flat map level ") + std::to_string(k) +
                            ": " + e.what(),
                        k);
    }
  }
  return phi;
}

Eigen::VectorXd stack_values(const std::vector<SVec<Jet>>& phi, int levels) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(levels * phi[0].size()));
  Eigen::Index o = 0;
  for (int k = 0; k < levels; ++k)
    for (const Jet& j : phi[static_cast<size_t>(k)]) out[o++] = j.value();
  return out;
}

void check_validity(const FlatnessDiffeomorphism& diffeo,
                    const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  if (diffeo.model.validity && !diffeo.model.validity(x, u))
    throw DomainError("flat map result violates the validity predicate");
}

}  // namespace

Eigen::VectorXd state_from_flat(const FlatnessDiffeomorphism& diffeo,
                                std::span<const Jet> y_jets) {
  const auto phi = recurse(diffeo, y_jets, diffeo.model.r);
  Eigen::VectorXd x = stack_values(phi, diffeo.model.r);
  check_validity(diffeo, x, Eigen::VectorXd::Zero(diffeo.model.m));
  return x;
}

Eigen::VectorXd input_from_flat(const FlatnessDiffeomorphism& diffeo,
                                std::span<const Jet> y_jets) {
  return state_and_input_from_flat(diffeo, y_jets).input;
}

FlatEvaluation state_and_input_from_flat(const FlatnessDiffeomorphism& diffeo,
                                         std::span<const Jet> y_jets) {
  const int r = diffeo.model.r;
  const auto phi = recurse(diffeo, y_jets, r + 1);
  FlatEvaluation out;
  out.state = stack_values(phi, r);
  out.input.resize(diffeo.model.m);
  for (int j = 0; j < diffeo.model.m; ++j)
    out.input[j] = phi[static_cast<size_t>(r)][static_cast<size_t>(j)].value();
  check_validity(diffeo, out.state, out.input);
  return out;
}

std::vector<Jet> flat_derivatives_from_state(
    const FlatnessDiffeomorphism& diffeo, const Eigen::VectorXd& x) {
  const auto& model = diffeo.model;
  const int r = model.r, m = model.m;
  if (x.size() != model.state_dim())
    throw std::invalid_argument("flat_derivatives_from_state: bad state size");
  if (model.validity && !model.validity(x, Eigen::VectorXd::Zero(m)))
    throw DomainError("flat_derivatives_from_state: state outside validity region");

  // Per-coordinate jets, all seeded at order 0.  Each sweep evaluates the
  // u-independent blocks and extends every coordinate by one Taylor order;
  // after r-1 sweeps x_1 carries derivatives through order r-1.
  std::vector<SVec<Jet>> X(static_cast<size_t>(r));
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < m; ++j)
      X[static_cast<size_t>(i)].push_back(Jet(x[i * m + j], 0));

  for (int sweep = 0; sweep < r - 1; ++sweep) {
    std::vector<SVec<Jet>> dX(static_cast<size_t>(r - 1));
    for (int i = 0; i < r - 1; ++i) {
      SVec<Jet> args;
      for (int b = 0; b <= i + 1; ++b)
        args.insert(args.end(), X[static_cast<size_t>(b)].begin(),
                    X[static_cast<size_t>(b)].end());
      SVec<Jet> di = model.f[static_cast<size_t>(i)].on_jet(
          std::span<const Jet>(args));
      if (diffeo.residual.block_active(i)) {
        SVec<Jet> delta = diffeo.residual.eval_block<Jet>(
            i, std::span<const Jet>(args));
        for (int j = 0; j < m; ++j)
          di[static_cast<size_t>(j)] =
              di[static_cast<size_t>(j)] + delta[static_cast<size_t>(j)];
      }
      dX[static_cast<size_t>(i)] = std::move(di);
    }
    for (int i = 0; i < r - 1; ++i)
      for (int j = 0; j < m; ++j) {
        const Jet& d = dX[static_cast<size_t>(i)][static_cast<size_t>(j)];
        Jet& xi = X[static_cast<size_t>(i)][static_cast<size_t>(j)];
        xi = time_integral(d, xi.value());
      }
  }
  return X[0];
}

}  // namespace flatres
