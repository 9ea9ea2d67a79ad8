#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "cgq/errors.hpp"
#include "cgq/operators.hpp"

namespace cgq {

struct DiagnosticsRow {
  long n = 0;
  double t = 0.0;
  double energy = 0.0;
  double mass = 0.0;
  double angular_momentum = 0.0;
  double sup_norm = 0.0;
  int fp_iters = 0;
};

struct RunMetadata {
  int q = 0;
  double h = 0.0;
  double tau = 0.0;
  double omega = 0.0;
  double beta = 0.0;
  double eps_fp = 0.0;
};

/// Time series of monitored quantities, one row per time node.
struct RunDiagnostics {
  RunMetadata meta;
  std::vector<DiagnosticsRow> rows;

  double max_relative_energy_drift() const {
    double worst = 0.0;
    if (rows.empty()) {
      return worst;
    }
    const double e0 = rows.front().energy;
    const double scale = e0 != 0.0 ? std::abs(e0) : 1.0;
    for (const auto& r : rows) {
      worst = std::max(worst, std::abs(r.energy - e0) / scale);
    }
    return worst;
  }

  double max_relative_mass_drift() const {
    double worst = 0.0;
    if (rows.empty()) {
      return worst;
    }
    const double m0 = rows.front().mass;
    const double scale = m0 != 0.0 ? m0 : 1.0;
    for (const auto& r : rows) {
      worst = std::max(worst, std::abs(r.mass - m0) / scale);
    }
    return worst;
  }
};

inline double quadratic_form(const ComplexSparse& A, const ComplexField& u) {
  return u.dot(A * u).real();
}

inline double quadratic_form(const RealSparse& A, const ComplexField& u) {
  return u.dot(A.cast<Complex>() * u).real();
}

/// ||u||_{L^2}^2
inline double mass(const ComplexField& u, const DiscreteOperators& ops) {
  return quadratic_form(ops.mass, u);
}

/// E(u) = 1/2 (u,u)_H + beta/4 int |u|^4
inline double energy(const ComplexField& u, const DiscreteOperators& ops, double beta) {
  const double quad = 0.5 * quadratic_form(ops.K, u);
  if (beta == 0.0) {
    return quad;
  }
  return quad + 0.25 * beta * quartic_integral(u, ops.elements);
}

/// Re (u, L_z u) with L_z = -i (x d_y - y d_x). The rotation part of K is
/// -Omega L_z, i.e. the L_z matrix is -i S(Omega = 1).
inline double angular_momentum(const ComplexField& u, const DiscreteOperators& ops) {
  const Eigen::VectorXcd Su = ops.rotation_unit.cast<Complex>() * u;
  return (Complex(0.0, -1.0) * u.dot(Su)).real();
}

inline double sup_norm(const ComplexField& u) {
  return u.size() == 0 ? 0.0 : u.cwiseAbs().maxCoeff();
}

/// ||u||_H = sqrt((u,u)_H)
inline double energy_norm(const ComplexField& u, const DiscreteOperators& ops) {
  return std::sqrt(std::max(0.0, quadratic_form(ops.K, u)));
}

struct ErrorNorms {
  double l2 = 0.0;
  double h1 = 0.0;
};

inline ErrorNorms error_norms(const ComplexField& a, const ComplexField& b,
                              const DiscreteOperators& ops) {
  if (a.size() != b.size() || a.size() != ops.size()) {
    throw DataError("error_norms: field lengths do not match the dof map");
  }
  const ComplexField d = a - b;
  const double l2sq = quadratic_form(ops.mass, d);
  const double semi = quadratic_form(ops.stiffness, d);
  return {std::sqrt(std::max(0.0, l2sq)), std::sqrt(std::max(0.0, l2sq + semi))};
}

/// Least-squares slope of log(error) against log(tau).
inline double fit_order(const std::vector<double>& taus, const std::vector<double>& errors) {
  if (taus.size() != errors.size()) {
    throw DataError("fit_order: taus and errors differ in length");
  }
  if (taus.size() < 3) {
    throw DataError("fit_order: need at least 3 samples");
  }
  const double n = static_cast<double>(taus.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < taus.size(); ++k) {
    if (!(errors[k] > 0.0) || !(taus[k] > 0.0)) {
      throw DataError("fit_order: taus and errors must be positive");
    }
    const double x = std::log(taus[k]);
    const double y = std::log(errors[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = n * sxx - sx * sx;
  if (!(denom > 1e-12 * n * sxx)) {
    throw DataError("fit_order: taus must not all be equal");
  }
  return (n * sxy - sx * sy) / denom;
}

inline DiagnosticsRow measure(long n, double t, const ComplexField& u,
                              const DiscreteOperators& ops, double beta, int fp_iters) {
  return {n, t, energy(u, ops, beta), mass(u, ops), angular_momentum(u, ops), sup_norm(u),
          fp_iters};
}

} // namespace cgq
