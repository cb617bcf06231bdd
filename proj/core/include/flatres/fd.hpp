#pragma once

#include <cassert>
#include <functional>
#include <vector>

namespace flatres::fd {

/// Fornberg weights for the m-th derivative at x0 from the grid `points`.
/// (B. Fornberg, "Generation of finite difference formulas on arbitrarily
/// spaced grids", Math. Comp. 51, 1988.)
inline std::vector<double> weights(double x0, const std::vector<double>& points,
                                   int m) {
  const int n = static_cast<int>(points.size());
  assert(m < n);
  std::vector<std::vector<double>> c(
      static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(m + 1), 0.0));
  double c1 = 1.0;
  double c4 = points[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = points[static_cast<size_t>(i)] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = points[static_cast<size_t>(i)] - points[static_cast<size_t>(j)];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[static_cast<size_t>(i)][static_cast<size_t>(k)] =
              c1 *
              (k * c[static_cast<size_t>(i - 1)][static_cast<size_t>(k - 1)] -
               c5 * c[static_cast<size_t>(i - 1)][static_cast<size_t>(k)]) /
              c2;
        c[static_cast<size_t>(i)][0] =
            -c1 * c5 * c[static_cast<size_t>(i - 1)][0] / c2;
      }
      for (int k = mn; k >= 1; --k)
        c[static_cast<size_t>(j)][static_cast<size_t>(k)] =
            (c4 * c[static_cast<size_t>(j)][static_cast<size_t>(k)] -
             k * c[static_cast<size_t>(j)][static_cast<size_t>(k - 1)]) /
            c3;
      c[static_cast<size_t>(j)][0] = c4 * c[static_cast<size_t>(j)][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    w[static_cast<size_t>(i)] = c[static_cast<size_t>(i)][static_cast<size_t>(m)];
  return w;
}

/// High-order central estimate of f^(m)(t): symmetric 9-point stencil with a
/// per-order spacing chosen to balance truncation against roundoff.
inline double derivative(const std::function<double(double)>& f, double t,
                         int m, double h = 0.0) {
  if (h == 0.0) h = m <= 2 ? 1e-2 : (m == 3 ? 2e-2 : 3e-2);
  std::vector<double> points;
  for (int i = -4; i <= 4; ++i) points.push_back(t + i * h);
  const std::vector<double> w = weights(t, points, m);
  double out = 0.0;
  for (size_t i = 0; i < points.size(); ++i) out += w[i] * f(points[i]);
  return out;
}

}  // namespace flatres::fd
