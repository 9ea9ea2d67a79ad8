#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "cgq/errors.hpp"

namespace cgq {

/// Quadrature rule on the unit interval [0,1]; weights sum to one.
struct QuadratureRule1D {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }

  template <typename F>
  auto integrate(F&& f) const {
    decltype(f(0.0)) acc{};
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      acc += weights[k] * f(nodes[k]);
    }
    return acc;
  }
};

inline constexpr int kMaxGaussOrder = 24;

namespace detail {

// Legendre polynomial P_n and its derivative at x in [-1,1].
inline std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0;
  double p1 = x;
  if (n == 0) {
    return {1.0, 0.0};
  }
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  const double dp = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

inline QuadratureRule1D gauss_legendre_unchecked(int q) {
  QuadratureRule1D rule;
  rule.nodes.assign(q, 0.0);
  rule.weights.assign(q, 0.0);
  const int half = (q + 1) / 2;
  for (int k = 0; k < half; ++k) {
    // Chebyshev-type initial guess for the k-th largest root.
    double x = std::cos(std::numbers::pi * (k + 0.75) / (q + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 50; ++it) {
      const auto [p, d] = detail::legendre(q, x);
      dp = d;
      const double dx = p / d;
      x -= dx;
      if (std::abs(dx) < 1e-15) {
        break;
      }
    }
    dp = detail::legendre(q, x).second;
    const double w = 1.0 / ((1.0 - x * x) * dp * dp); // half of the [-1,1] weight
    // Root x > 0 maps to the upper node; mirror for the lower one.
    const double upper = 0.5 * (1.0 + x);
    rule.nodes[q - 1 - k] = upper;
    rule.nodes[k] = 1.0 - upper;
    rule.weights[q - 1 - k] = w;
    rule.weights[k] = w;
  }
  if (q % 2 == 1) {
    rule.nodes[q / 2] = 0.5;
  }
  return rule;
}

} // namespace detail

/// q-point Gauss-Legendre rule on [0,1], exact for polynomials of degree 2q-1.
/// Supported range is 1 <= q <= kMaxGaussOrder (the time tableau uses at most
/// 2 * 12 points).
inline QuadratureRule1D gauss_legendre_01(int q) {
  if (q < 1 || q > kMaxGaussOrder) {
    throw ConfigError("gauss_legendre_01: order " + std::to_string(q) +
                      " outside supported range [1, " +
                      std::to_string(kMaxGaussOrder) + "]");
  }
  return detail::gauss_legendre_unchecked(q);
}

/// Symmetric rule on a triangle in barycentric coordinates. Weights sum to 1,
/// so integrating f over a triangle T is area(T) * sum_k w_k f(x_k).
struct TriangleRule {
  int degree = 0;
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
};

inline TriangleRule triangle_rule(int degree) {
  TriangleRule rule;
  rule.degree = degree;
  if (degree == 2) {
    constexpr double a = 2.0 / 3.0;
    constexpr double b = 1.0 / 6.0;
    rule.points = {{a, b, b}, {b, a, b}, {b, b, a}};
    rule.weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    return rule;
  }
  if (degree == 4) {
    // 6-point Strang-Fix / Dunavant rule.
    constexpr double a1 = 0.44594849091596488631832925388305;
    constexpr double b1 = 1.0 - 2.0 * a1;
    constexpr double w1 = 0.22338158967801146569500700843312;
    constexpr double a2 = 0.091576213509770743459571463402202;
    constexpr double b2 = 1.0 - 2.0 * a2;
    constexpr double w2 = 0.10995174365532186763832632490021;
    rule.points = {{b1, a1, a1}, {a1, b1, a1}, {a1, a1, b1},
                   {b2, a2, a2}, {a2, b2, a2}, {a2, a2, b2}};
    rule.weights = {w1, w1, w1, w2, w2, w2};
    return rule;
  }
  throw ConfigError("triangle_rule: unsupported degree " +
                    std::to_string(degree) + " (supported: 2, 4)");
}

} // namespace cgq
