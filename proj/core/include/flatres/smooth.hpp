#pragma once

#include <Eigen/Core>
#include <cmath>
#include <concepts>
#include <numbers>
#include <span>
#include <vector>

#include "flatres/dual.hpp"
#include "flatres/jet.hpp"

namespace flatres {

/// The scalar carriers every smooth map in this library is written against.
/// All three agree with the plain-double evaluation on the value slot.
template <class S>
concept SmoothScalar = std::same_as<S, double> || std::same_as<S, Jet> ||
                       std::same_as<S, Dual>;

template <SmoothScalar S>
using SVec = std::vector<S>;

// Plain-double forwarders so generic maps can call the math functions
// unqualified for every carrier (Jet and Dual overloads come in via the
// namespace).
inline double sin(double x) { return std::sin(x); }
inline double cos(double x) { return std::cos(x); }
inline double exp(double x) { return std::exp(x); }
inline double erf(double x) { return std::erf(x); }
inline double sqrt(double x) { return std::sqrt(x); }
inline double atan2(double y, double x) { return std::atan2(y, x); }

// Zero of the same order/width as a prototype carrier.  Generic code must
// build additive identities this way: a raw S{0} would carry order 0 /
// width 0 and truncate whatever it combines with.
inline double zero_like(double) { return 0.0; }
inline Jet zero_like(const Jet& proto) { return Jet(0.0, proto.order()); }
inline Dual zero_like(const Dual& proto) { return Dual(0.0, proto.width()); }

inline SVec<double> to_svec(const Eigen::VectorXd& x) {
  return SVec<double>(x.data(), x.data() + x.size());
}

inline Eigen::VectorXd to_eigen(const SVec<double>& x) {
  return Eigen::Map<const Eigen::VectorXd>(x.data(),
                                           static_cast<Eigen::Index>(x.size()));
}

/// GeLU written through erf so it stays exact and smooth under jet and dual
/// propagation: 0.5 x (1 + erf(x / sqrt(2))).
template <SmoothScalar S>
S gelu(const S& x) {
  return 0.5 * x * (erf(x * (1.0 / std::numbers::sqrt2)) + 1.0);
}

}  // namespace flatres
