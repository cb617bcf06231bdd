#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <initializer_list>
#include <numbers>
#include <span>
#include <vector>

#include "flatres/errors.hpp"

namespace flatres {

/// Highest supported truncated-Taylor order.  The quadrotor needs the flat
/// output through its 4th derivative plus one slack order.
inline constexpr int kMaxJetOrder = 5;

/// Truncated Taylor expansion of a scalar time signal z at the current time.
///
/// Coefficients are stored scaled, coeff(k) = z^(k)/k!, which keeps the
/// product/composition recurrences free of factorial growth.  Raw
/// derivatives are exposed through derivative(k).
///
/// Binary operations truncate to the smaller operand order; a plain double
/// acts as a constant of the partner's order.  Value slots are always
/// computed with exactly the same floating-point operation as a plain double
/// evaluation, so value(g(jets)) == g(values) bit for bit.
class Jet {
 public:
  Jet() : order_(0) { coeffs_.fill(0.0); }

  explicit Jet(double value, int order = 0) : order_(order) {
    assert(order >= 0 && order <= kMaxJetOrder);
    coeffs_.fill(0.0);
    coeffs_[0] = value;
  }

  static Jet constant(double value, int order) { return Jet(value, order); }

  /// Jet of the identity signal t -> t: value slot t, first derivative 1.
  static Jet variable(double t, int order) {
    Jet j(t, order);
    if (order >= 1) j.coeffs_[1] = 1.0;
    return j;
  }

  int order() const { return order_; }
  double value() const { return coeffs_[0]; }

  /// Scaled Taylor coefficient z^(k)/k!.
  double coeff(int k) const {
    assert(k >= 0 && k <= order_);
    return coeffs_[k];
  }
  void set_coeff(int k, double c) {
    assert(k >= 0 && k <= order_);
    coeffs_[k] = c;
  }

  /// Raw derivative z^(k) = k! * coeff(k).
  double derivative(int k) const {
    assert(k >= 0 && k <= order_);
    double fact = 1.0;
    for (int i = 2; i <= k; ++i) fact *= i;
    return coeffs_[k] * fact;
  }

  Jet truncated(int order) const {
    assert(order <= order_);
    Jet out(0.0, order);
    for (int k = 0; k <= order; ++k) out.coeffs_[k] = coeffs_[k];
    return out;
  }

  friend Jet operator-(const Jet& a) {
    Jet out(0.0, a.order_);
    for (int k = 0; k <= a.order_; ++k) out.coeffs_[k] = -a.coeffs_[k];
    return out;
  }
  friend Jet operator+(const Jet& a, const Jet& b) {
    const int n = std::min(a.order_, b.order_);
    Jet out(0.0, n);
    for (int k = 0; k <= n; ++k) out.coeffs_[k] = a.coeffs_[k] + b.coeffs_[k];
    return out;
  }
  friend Jet operator-(const Jet& a, const Jet& b) {
    const int n = std::min(a.order_, b.order_);
    Jet out(0.0, n);
    for (int k = 0; k <= n; ++k) out.coeffs_[k] = a.coeffs_[k] - b.coeffs_[k];
    return out;
  }

  // Cauchy product of the truncated series.
  friend Jet operator*(const Jet& a, const Jet& b) {
    const int n = std::min(a.order_, b.order_);
    Jet out(0.0, n);
    for (int k = 0; k <= n; ++k) {
      double s = 0.0;
      for (int j = 1; j <= k; ++j) s += a.coeffs_[j] * b.coeffs_[k - j];
      // j == 0 term kept separate so the value slot is exactly a0*b0.
      out.coeffs_[k] = a.coeffs_[0] * b.coeffs_[k] + s;
    }
    out.coeffs_[0] = a.coeffs_[0] * b.coeffs_[0];
    return out;
  }

  // q = a/b: q_k = (a_k - sum_{j<k} q_j b_{k-j}) / b_0.
  friend Jet operator/(const Jet& a, const Jet& b) {
    if (b.coeffs_[0] == 0.0)
      throw DomainError("jet division by zero value slot");
    const int n = std::min(a.order_, b.order_);
    Jet out(0.0, n);
    out.coeffs_[0] = a.coeffs_[0] / b.coeffs_[0];
    for (int k = 1; k <= n; ++k) {
      double s = a.coeffs_[k];
      for (int j = 0; j < k; ++j) s -= out.coeffs_[j] * b.coeffs_[k - j];
      out.coeffs_[k] = s / b.coeffs_[0];
    }
    return out;
  }

  friend Jet operator+(const Jet& a, double c) {
    Jet out = a;
    out.coeffs_[0] = a.coeffs_[0] + c;
    return out;
  }
  friend Jet operator+(double c, const Jet& a) { return a + c; }
  friend Jet operator-(const Jet& a, double c) { return a + (-c); }
  friend Jet operator-(double c, const Jet& a) {
    Jet out = -a;
    out.coeffs_[0] = c - a.coeffs_[0];
    return out;
  }
  friend Jet operator*(const Jet& a, double c) {
    Jet out(0.0, a.order_);
    for (int k = 0; k <= a.order_; ++k) out.coeffs_[k] = a.coeffs_[k] * c;
    return out;
  }
  friend Jet operator*(double c, const Jet& a) {
    Jet out(0.0, a.order_);
    for (int k = 0; k <= a.order_; ++k) out.coeffs_[k] = c * a.coeffs_[k];
    return out;
  }
  friend Jet operator/(const Jet& a, double c) {
    Jet out(0.0, a.order_);
    for (int k = 0; k <= a.order_; ++k) out.coeffs_[k] = a.coeffs_[k] / c;
    return out;
  }
  friend Jet operator/(double c, const Jet& a) { return Jet(c, a.order_) / a; }

 private:
  std::array<double, kMaxJetOrder + 1> coeffs_;
  int order_;
};

/// Jet of the time derivative: coefficients shift down one slot, order drops
/// by one.
inline Jet time_derivative(const Jet& a) {
  assert(a.order() >= 1);
  Jet out(0.0, a.order() - 1);
  for (int k = 0; k + 1 <= a.order(); ++k)
    out.set_coeff(k, (k + 1) * a.coeff(k + 1));
  return out;
}

/// Antiderivative with prescribed value slot; order grows by one.
inline Jet time_integral(const Jet& d, double value) {
  assert(d.order() + 1 <= kMaxJetOrder);
  Jet out(value, d.order() + 1);
  for (int k = 0; k <= d.order(); ++k) out.set_coeff(k + 1, d.coeff(k) / (k + 1));
  return out;
}

/// Builds the jet of a signal from its value and raw derivatives
/// [z', z'', ..., z^(K)].
inline Jet jet_lift(double value, std::span<const double> derivatives) {
  const int order = static_cast<int>(derivatives.size());
  if (order > kMaxJetOrder) throw DomainError("jet order exceeds kMaxJetOrder");
  if (!std::isfinite(value)) throw DomainError("jet_lift: non-finite value");
  Jet out(value, order);
  double fact = 1.0;
  for (int k = 1; k <= order; ++k) {
    fact *= k;
    const double d = derivatives[k - 1];
    if (!std::isfinite(d)) throw DomainError("jet_lift: non-finite derivative");
    out.set_coeff(k, d / fact);
  }
  return out;
}

inline Jet jet_lift(double value, std::initializer_list<double> derivatives) {
  return jet_lift(
      value, std::span<const double>(derivatives.begin(), derivatives.size()));
}

namespace detail {

// r with r' = g * a', given r_0.  Scaled coefficients satisfy
// (k+1) r_{k+1} = sum_{j=0..k} (k+1-j) a_{k+1-j} g_j.
inline Jet compose_through_derivative(const Jet& a, const Jet& g, double r0) {
  const int n = a.order();
  Jet out(r0, n);
  for (int k = 0; k + 1 <= n; ++k) {
    double s = 0.0;
    for (int j = 0; j <= k && j <= g.order(); ++j)
      s += (k + 1 - j) * a.coeff(k + 1 - j) * g.coeff(j);
    out.set_coeff(k + 1, s / (k + 1));
  }
  return out;
}

}  // namespace detail

inline Jet sin(const Jet& a);
inline Jet cos(const Jet& a);

// sin/cos share the coupled recurrence
//   k s_k =  sum_{j=1..k} j a_j c_{k-j},
//   k c_k = -sum_{j=1..k} j a_j s_{k-j}.
inline Jet sin(const Jet& a) {
  const int n = a.order();
  Jet s(std::sin(a.value()), n);
  Jet c(std::cos(a.value()), n);
  for (int k = 1; k <= n; ++k) {
    double ss = 0.0, cc = 0.0;
    for (int j = 1; j <= k; ++j) {
      ss += j * a.coeff(j) * c.coeff(k - j);
      cc += j * a.coeff(j) * s.coeff(k - j);
    }
    s.set_coeff(k, ss / k);
    c.set_coeff(k, -cc / k);
  }
  return s;
}

inline Jet cos(const Jet& a) {
  const int n = a.order();
  Jet s(std::sin(a.value()), n);
  Jet c(std::cos(a.value()), n);
  for (int k = 1; k <= n; ++k) {
    double ss = 0.0, cc = 0.0;
    for (int j = 1; j <= k; ++j) {
      ss += j * a.coeff(j) * c.coeff(k - j);
      cc += j * a.coeff(j) * s.coeff(k - j);
    }
    s.set_coeff(k, ss / k);
    c.set_coeff(k, -cc / k);
  }
  return c;
}

// e_k = (1/k) sum_{j=1..k} j a_j e_{k-j}.
inline Jet exp(const Jet& a) {
  const int n = a.order();
  Jet out(std::exp(a.value()), n);
  for (int k = 1; k <= n; ++k) {
    double s = 0.0;
    for (int j = 1; j <= k; ++j) s += j * a.coeff(j) * out.coeff(k - j);
    out.set_coeff(k, s / k);
  }
  return out;
}

// s_k = (a_k - sum_{j=1..k-1} s_j s_{k-j}) / (2 s_0).
inline Jet sqrt(const Jet& a) {
  if (a.value() < 0.0) throw DomainError("jet sqrt of negative value slot");
  if (a.value() == 0.0 && a.order() > 0)
    throw DomainError("jet sqrt at zero is not differentiable");
  const int n = a.order();
  Jet out(std::sqrt(a.value()), n);
  for (int k = 1; k <= n; ++k) {
    double s = a.coeff(k);
    for (int j = 1; j < k; ++j) s -= out.coeff(j) * out.coeff(k - j);
    out.set_coeff(k, s / (2.0 * out.coeff(0)));
  }
  return out;
}

// erf' = (2/sqrt(pi)) e^{-a^2}.
inline Jet erf(const Jet& a) {
  const Jet g = exp(-(a * a)) * (2.0 * std::numbers::inv_sqrtpi);
  return detail::compose_through_derivative(a, g, std::erf(a.value()));
}

// d/dt atan2(y, x) = (y' x - y x') / (x^2 + y^2).
inline Jet atan2(const Jet& y, const Jet& x) {
  const int n = std::min(y.order(), x.order());
  const double denom0 = y.value() * y.value() + x.value() * x.value();
  if (denom0 < 1e-12) throw DomainError("jet atan2 near the origin");
  Jet out(std::atan2(y.value(), x.value()), n);
  if (n >= 1) {
    const Jet yt = y.truncated(n), xt = x.truncated(n);
    const Jet num = time_derivative(yt) * xt - yt * time_derivative(xt);
    const Jet q = num / (xt * xt + yt * yt);
    for (int k = 0; k + 1 <= n; ++k) out.set_coeff(k + 1, q.coeff(k) / (k + 1));
  }
  return out;
}

inline double value_of(const Jet& a) { return a.value(); }
inline double value_of(double a) { return a; }

}  // namespace flatres
