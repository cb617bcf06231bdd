#include "flatres/pure_feedback.hpp"

#include <Eigen/Dense>
#include <stdexcept>

#include "flatres/errors.hpp"

namespace flatres {

Eigen::VectorXd eval_dynamics(const PureFeedbackModel& model,
                              const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u) {
  if (x.size() != model.state_dim() || u.size() != model.input_dim())
    throw std::invalid_argument("eval_dynamics: dimension mismatch");
  if (model.validity && !model.validity(x, u))
    throw DomainError("eval_dynamics: (x, u) outside the validity region");
  SVec<double> xu(x.data(), x.data() + x.size());
  xu.insert(xu.end(), u.data(), u.data() + u.size());
  return to_eigen(eval_blocks<double>(model, xu));
}

RegularityReport check_regularity(const PureFeedbackModel& model,
                                  const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& u, double tol) {
  if (x.size() != model.state_dim() || u.size() != model.input_dim())
    throw std::invalid_argument("check_regularity: dimension mismatch");
  Eigen::VectorXd xu(x.size() + u.size());
  xu << x, u;
  RegularityReport report;
  report.all_pass = true;
  for (int i = 0; i < model.r; ++i) {
    const int in_dim = (i + 2) * model.m;
    const Eigen::VectorXd prefix = xu.head(in_dim);
    // Seed only the newest sub-state x_{i+1} (the trailing m entries).
    auto partial = [&](std::span<const Dual> tail) {
      DualVector args;
      args.reserve(static_cast<size_t>(in_dim));
      for (int j = 0; j < in_dim - model.m; ++j)
        args.push_back(Dual::constant(prefix[j], static_cast<int>(tail.size())));
      args.insert(args.end(), tail.begin(), tail.end());
      return model.f[static_cast<size_t>(i)].on_dual(std::span<const Dual>(args));
    };
    const Eigen::MatrixXd jac = jacobian(partial, prefix.tail(model.m));
    const double det = jac.partialPivLu().determinant();
    report.det_magnitude.push_back(std::abs(det));
    report.pass.push_back(std::abs(det) > tol);
    if (!report.pass.back()) report.all_pass = false;
  }
  return report;
}

InverseIdentityReport verify_inverse_identity(
    const PureFeedbackModel& model,
    const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& samples) {
  InverseIdentityReport report;
  report.max_violation.assign(static_cast<size_t>(model.r), 0.0);
  for (const auto& [x, u] : samples) {
    Eigen::VectorXd xu(x.size() + u.size());
    xu << x, u;
    SVec<double> stacked(xu.data(), xu.data() + xu.size());
    for (int k = 0; k < model.r; ++k) {
      const int in_dim = (k + 2) * model.m;
      SVec<double> c = model.f[static_cast<size_t>(k)].on_real(
          std::span<const double>(stacked.data(), static_cast<size_t>(in_dim)));
      SVec<double> args(stacked.begin(), stacked.begin() + (k + 1) * model.m);
      args.insert(args.end(), c.begin(), c.end());
      SVec<double> recovered =
          model.h[static_cast<size_t>(k)].on_real(std::span<const double>(args));
      double viol = 0.0;
      for (int j = 0; j < model.m; ++j)
        viol = std::max(viol,
                        std::abs(recovered[static_cast<size_t>(j)] -
                                 xu[(k + 1) * model.m + j]));
      auto& worst = report.max_violation[static_cast<size_t>(k)];
      worst = std::max(worst, viol);
      report.overall = std::max(report.overall, viol);
    }
    ++report.samples;
  }
  return report;
}

}  // namespace flatres
