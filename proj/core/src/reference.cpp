#include "flatres/reference.hpp"

#include <numbers>

#include "flatres/smooth.hpp"

namespace flatres {

namespace {

// One generic definition serves both the jet evaluator and the plain
// position lookup, keeping their value slots bit-identical.
template <SmoothScalar S>
SVec<S> eval_reference(Reference::Kind kind, double a, double b, double omega,
                       const S& t) {
  const S s = sin(omega * t);
  const S c = cos(omega * t);
  if (kind == Reference::Kind::Circle) return {c, s};
  const S denom = s * s + 1.0;
  return {(a * c) / denom, (b * (s * c)) / denom};
}

}  // namespace

double Reference::omega() const { return 2.0 * std::numbers::pi / period; }

std::vector<Jet> Reference::jets(double t, int order) const {
  const Jet time = Jet::variable(t, order);
  return eval_reference<Jet>(kind, a, b, omega(), time);
}

Eigen::Vector2d Reference::position(double t) const {
  SVec<double> p = eval_reference<double>(kind, a, b, omega(), t);
  return {p[0], p[1]};
}

Reference make_circle(double period) {
  Reference r;
  r.kind = Reference::Kind::Circle;
  r.period = period;
  return r;
}

Reference make_lemniscate(double a, double b, double period) {
  Reference r;
  r.kind = Reference::Kind::Lemniscate;
  r.a = a;
  r.b = b;
  r.period = period;
  return r;
}

}  // namespace flatres
