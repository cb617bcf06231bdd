#pragma once

#include <Eigen/Core>
#include <vector>

#include "flatres/jet.hpp"

namespace flatres {

/// Periodic planar reference with analytic derivatives of any order up to
/// kMaxJetOrder, obtained by evaluating the position formulas in jet
/// arithmetic on the time variable:
///   circle:      p(t) = (cos wt, sin wt)
///   lemniscate:  p(t) = (a cos wt, b sin wt cos wt) / (1 + sin^2 wt)
struct Reference {
  enum class Kind { Circle, Lemniscate };

  Kind kind = Kind::Circle;
  double a = 1.0;
  double b = 0.6;
  double period = 14.0;

  double omega() const;

  /// m = 2 jets of the requested order at time t.
  std::vector<Jet> jets(double t, int order) const;

  Eigen::Vector2d position(double t) const;
};

Reference make_circle(double period = 14.0);
Reference make_lemniscate(double a = 1.0, double b = 0.6, double period = 14.0);

}  // namespace flatres
