#pragma once

#include <Eigen/Core>
#include <array>
#include <cassert>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "flatres/errors.hpp"

namespace flatres {

/// Widest directional-derivative block a single Dual carries.  Wider
/// Jacobians are assembled by jacobian() in seed chunks.
inline constexpr int kMaxDualWidth = 16;

/// First-order forward-mode scalar: a value plus a row of directional
/// perturbations.  Propagating a map g over Duals yields Dg(value) * seed in
/// the perturbation block, to first order.
///
/// Mixed-width operands are not allowed; a plain double behaves as a
/// constant of the partner's width.  Value slots use the same floating-point
/// operations as a plain double evaluation.
class Dual {
 public:
  Dual() : v_(0.0), width_(0) { d_.fill(0.0); }

  explicit Dual(double value, int width = 0) : v_(value), width_(width) {
    assert(width >= 0 && width <= kMaxDualWidth);
    d_.fill(0.0);
  }

  static Dual constant(double value, int width) { return Dual(value, width); }

  /// Unit perturbation in direction `index`.
  static Dual seeded(double value, int width, int index) {
    Dual out(value, width);
    assert(index >= 0 && index < width);
    out.d_[index] = 1.0;
    return out;
  }

  double value() const { return v_; }
  int width() const { return width_; }
  double deriv(int i) const {
    assert(i >= 0 && i < width_);
    return d_[i];
  }
  void set_deriv(int i, double d) {
    assert(i >= 0 && i < width_);
    d_[i] = d;
  }

  friend Dual operator-(const Dual& a) {
    Dual out(-a.v_, a.width_);
    for (int i = 0; i < a.width_; ++i) out.d_[i] = -a.d_[i];
    return out;
  }
  friend Dual operator+(const Dual& a, const Dual& b) {
    assert(a.width_ == b.width_);
    Dual out(a.v_ + b.v_, a.width_);
    for (int i = 0; i < a.width_; ++i) out.d_[i] = a.d_[i] + b.d_[i];
    return out;
  }
  friend Dual operator-(const Dual& a, const Dual& b) {
    assert(a.width_ == b.width_);
    Dual out(a.v_ - b.v_, a.width_);
    for (int i = 0; i < a.width_; ++i) out.d_[i] = a.d_[i] - b.d_[i];
    return out;
  }
  friend Dual operator*(const Dual& a, const Dual& b) {
    assert(a.width_ == b.width_);
    Dual out(a.v_ * b.v_, a.width_);
    for (int i = 0; i < a.width_; ++i)
      out.d_[i] = a.d_[i] * b.v_ + a.v_ * b.d_[i];
    return out;
  }
  friend Dual operator/(const Dual& a, const Dual& b) {
    assert(a.width_ == b.width_);
    if (b.v_ == 0.0) throw DomainError("dual division by zero value slot");
    Dual out(a.v_ / b.v_, a.width_);
    const double inv = 1.0 / b.v_;
    for (int i = 0; i < a.width_; ++i)
      out.d_[i] = (a.d_[i] - out.v_ * b.d_[i]) * inv;
    return out;
  }

  friend Dual operator+(const Dual& a, double c) {
    Dual out = a;
    out.v_ = a.v_ + c;
    return out;
  }
  friend Dual operator+(double c, const Dual& a) { return a + c; }
  friend Dual operator-(const Dual& a, double c) { return a + (-c); }
  friend Dual operator-(double c, const Dual& a) {
    Dual out = -a;
    out.v_ = c - a.v_;
    return out;
  }
  friend Dual operator*(const Dual& a, double c) {
    Dual out(a.v_ * c, a.width_);
    for (int i = 0; i < a.width_; ++i) out.d_[i] = a.d_[i] * c;
    return out;
  }
  friend Dual operator*(double c, const Dual& a) {
    Dual out(c * a.v_, a.width_);
    for (int i = 0; i < a.width_; ++i) out.d_[i] = c * a.d_[i];
    return out;
  }
  friend Dual operator/(const Dual& a, double c) {
    Dual out(a.v_ / c, a.width_);
    for (int i = 0; i < a.width_; ++i) out.d_[i] = a.d_[i] / c;
    return out;
  }
  friend Dual operator/(double c, const Dual& a) {
    return Dual(c, a.width_) / a;
  }

  friend Dual sin(const Dual& a) {
    Dual out(std::sin(a.v_), a.width_);
    const double g = std::cos(a.v_);
    for (int i = 0; i < a.width_; ++i) out.d_[i] = g * a.d_[i];
    return out;
  }
  friend Dual cos(const Dual& a) {
    Dual out(std::cos(a.v_), a.width_);
    const double g = -std::sin(a.v_);
    for (int i = 0; i < a.width_; ++i) out.d_[i] = g * a.d_[i];
    return out;
  }
  friend Dual exp(const Dual& a) {
    Dual out(std::exp(a.v_), a.width_);
    for (int i = 0; i < a.width_; ++i) out.d_[i] = out.v_ * a.d_[i];
    return out;
  }
  friend Dual sqrt(const Dual& a) {
    if (a.v_ < 0.0) throw DomainError("dual sqrt of negative value slot");
    if (a.v_ == 0.0 && a.width_ > 0)
      throw DomainError("dual sqrt at zero is not differentiable");
    Dual out(std::sqrt(a.v_), a.width_);
    const double g = a.width_ > 0 ? 0.5 / out.v_ : 0.0;
    for (int i = 0; i < a.width_; ++i) out.d_[i] = g * a.d_[i];
    return out;
  }
  friend Dual erf(const Dual& a) {
    Dual out(std::erf(a.v_), a.width_);
    const double g = 2.0 * std::numbers::inv_sqrtpi * std::exp(-a.v_ * a.v_);
    for (int i = 0; i < a.width_; ++i) out.d_[i] = g * a.d_[i];
    return out;
  }
  friend Dual atan2(const Dual& y, const Dual& x) {
    assert(y.width_ == x.width_);
    const double denom = y.v_ * y.v_ + x.v_ * x.v_;
    if (denom < 1e-12) throw DomainError("dual atan2 near the origin");
    Dual out(std::atan2(y.v_, x.v_), y.width_);
    for (int i = 0; i < y.width_; ++i)
      out.d_[i] = (y.d_[i] * x.v_ - y.v_ * x.d_[i]) / denom;
    return out;
  }

 private:
  std::array<double, kMaxDualWidth> d_;
  double v_;
  int width_;
};

inline double value_of(const Dual& a) { return a.value(); }

/// A vector-valued dual: value vector plus an n x p seed block, stored entry
/// by entry.
using DualVector = std::vector<Dual>;

inline DualVector make_duals(const Eigen::VectorXd& x,
                             const Eigen::MatrixXd& seed) {
  assert(seed.rows() == x.size() && seed.cols() <= kMaxDualWidth);
  DualVector out;
  out.reserve(static_cast<size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Dual d(x[i], static_cast<int>(seed.cols()));
    for (Eigen::Index j = 0; j < seed.cols(); ++j)
      d.set_deriv(static_cast<int>(j), seed(i, j));
    out.push_back(d);
  }
  return out;
}

inline Eigen::VectorXd values_of(const DualVector& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i].value();
  return out;
}

inline Eigen::MatrixXd seeds_of(const DualVector& v) {
  const int w = v.empty() ? 0 : v.front().width();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(v.size()), w);
  for (size_t i = 0; i < v.size(); ++i)
    for (int j = 0; j < w; ++j) out(static_cast<Eigen::Index>(i), j) = v[i].deriv(j);
  return out;
}

/// Full Jacobian of `f` at `x` from forward passes with identity seeds,
/// chunked when x is wider than kMaxDualWidth.  `f` maps a
/// std::span<const Dual> to a std::vector<Dual>.
template <class F>
Eigen::MatrixXd jacobian(F&& f, const Eigen::VectorXd& x) {
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd result;
  for (int col0 = 0; col0 < n || (n == 0 && col0 == 0); col0 += kMaxDualWidth) {
    const int w = std::min(kMaxDualWidth, n - col0);
    Eigen::MatrixXd seed = Eigen::MatrixXd::Zero(n, w);
    for (int j = 0; j < w; ++j) seed(col0 + j, j) = 1.0;
    DualVector xd = make_duals(x, seed);
    DualVector yd = f(std::span<const Dual>(xd));
    if (result.size() == 0)
      result.resize(static_cast<Eigen::Index>(yd.size()), n);
    for (size_t i = 0; i < yd.size(); ++i)
      for (int j = 0; j < w; ++j)
        result(static_cast<Eigen::Index>(i), col0 + j) = yd[i].deriv(j);
    if (n == 0) break;
  }
  return result;
}

}  // namespace flatres
