#pragma once

#include <algorithm>
#include <complex>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cgq/errors.hpp"
#include "cgq/lagrange.hpp"
#include "cgq/quadrature.hpp"

namespace cgq {

inline constexpr int kMaxTimeOrder = 12;

/// All order-q constants of the continuous Galerkin time step.
///
/// Index conventions: stage indices i, j run over 0..q-1 for the Gauss nodes
/// s_1..s_q; the extended basis ell_hat uses 0..q with index 0 the left
/// endpoint s_0 = 0. Fine-rule indices nu run over 0..2q-1.
struct CollocationTableau {
  int q = 0;
  QuadratureRule1D gauss;      // q-point rule: nodes s_j, weights w_j
  QuadratureRule1D fine;       // 2q-point rule for the nonlinear term
  LagrangeBasis ell;           // degree q-1 over {s_1..s_q}
  LagrangeBasis ell_hat;       // degree q over {0, s_1..s_q}

  Eigen::MatrixXd m;           // q x (q+1), m(i,j) = int ell_hat_j' ell_i
  Eigen::MatrixXd m_sub;       // q x q, columns 1..q of m
  Eigen::MatrixXd stab;        // D^{-1/2} m_sub D^{1/2}
  Eigen::MatrixXd A;           // m_sub^{-1} W, the Gauss IRK matrix

  Eigen::MatrixXcd sigma;      // sigma * A * sigma^{-1} = diag(gamma)
  Eigen::MatrixXcd sigma_inv;
  Eigen::VectorXcd gamma;

  Eigen::VectorXcd a;          // a_i = sum_j sigma(i,j)
  Eigen::MatrixXcd b;          // q x 2q
  Eigen::VectorXd c0;          // 2q, ell_hat_0 at fine nodes
  Eigen::MatrixXcd c;          // q x 2q, c(i,nu) = sum_j ell_hat_j(fine_nu) sigma_inv(j,i)

  Eigen::VectorXd ell_hat_at_one; // q+1
  Eigen::MatrixXd ell_at_fine;    // q x 2q, ell_i(fine_nu)
  Eigen::MatrixXd ell_hat_at_fine; // (q+1) x 2q
};

namespace detail {

inline void diagonalize(CollocationTableau& t) {
  const int q = t.q;
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(t.A.cast<std::complex<double>>());
  if (es.info() != Eigen::Success) {
    throw NumericalError("build_tableau: eigen-decomposition of A failed");
  }
  std::vector<int> order(q);
  std::iota(order.begin(), order.end(), 0);
  const auto& ev = es.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    const double dx = ev[x].imag() - ev[y].imag();
    if (std::abs(dx) > 1e-12) {
      return dx < 0.0;
    }
    return ev[x].real() < ev[y].real();
  });
  Eigen::MatrixXcd vecs(q, q);
  t.gamma.resize(q);
  for (int k = 0; k < q; ++k) {
    Eigen::VectorXcd col = es.eigenvectors().col(order[k]);
    col /= col.norm();
    vecs.col(k) = col;
    t.gamma[k] = ev[order[k]];
  }
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(vecs);
  if (!lu.isInvertible()) {
    throw NumericalError("build_tableau: A is not diagonalizable");
  }
  t.sigma_inv = vecs;
  t.sigma = lu.inverse();
}

} // namespace detail

/// Builds every time-discretization constant for order q.
inline CollocationTableau build_tableau(int q) {
  if (q < 1 || q > kMaxTimeOrder) {
    throw ConfigError("build_tableau: order " + std::to_string(q) +
                      " outside supported range [1, " +
                      std::to_string(kMaxTimeOrder) + "]");
  }
  CollocationTableau t;
  t.q = q;
  t.gauss = gauss_legendre_01(q);
  t.fine = gauss_legendre_01(2 * q);
  t.ell = LagrangeBasis(t.gauss.nodes);
  std::vector<double> ext{0.0};
  ext.insert(ext.end(), t.gauss.nodes.begin(), t.gauss.nodes.end());
  t.ell_hat = LagrangeBasis(ext);

  // ell_hat_j' * ell_i has degree 2q-2; the 2q-point rule is exact.
  t.m.resize(q, q + 1);
  for (int i = 0; i < q; ++i) {
    for (int j = 0; j <= q; ++j) {
      t.m(i, j) = t.fine.integrate(
          [&](double s) { return t.ell_hat.derivative(j, s) * t.ell.value(i, s); });
    }
  }
  t.m_sub = t.m.rightCols(q);

  Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(t.gauss.weights.data(), q);
  Eigen::VectorXd s = Eigen::Map<const Eigen::VectorXd>(t.gauss.nodes.data(), q);
  t.stab = s.cwiseSqrt().cwiseInverse().asDiagonal() * t.m_sub * s.cwiseSqrt().asDiagonal();

  Eigen::FullPivLU<Eigen::MatrixXd> mlu(t.m_sub);
  if (!mlu.isInvertible()) {
    throw NumericalError("build_tableau: coefficient block is singular");
  }
  t.A = mlu.solve(Eigen::MatrixXd(w.asDiagonal()));

  detail::diagonalize(t);

  const int nf = 2 * q;
  t.ell_at_fine.resize(q, nf);
  t.ell_hat_at_fine.resize(q + 1, nf);
  for (int nu = 0; nu < nf; ++nu) {
    const double sf = t.fine.nodes[nu];
    for (int i = 0; i < q; ++i) {
      t.ell_at_fine(i, nu) = t.ell.value(i, sf);
    }
    for (int j = 0; j <= q; ++j) {
      t.ell_hat_at_fine(j, nu) = t.ell_hat.value(j, sf);
    }
  }
  t.ell_hat_at_one.resize(q + 1);
  for (int j = 0; j <= q; ++j) {
    t.ell_hat_at_one[j] = t.ell_hat.value(j, 1.0);
  }

  // Decoupled system coefficients. The nonlinear coupling transforms with
  // sigma * m_sub^{-1}, which is what sigma * A * sigma^{-1} = Gamma requires.
  t.a = t.sigma.rowwise().sum();
  const Eigen::MatrixXcd sm_inv =
      t.sigma * mlu.inverse().cast<std::complex<double>>();
  t.b.resize(q, nf);
  t.c.resize(q, nf);
  t.c0.resize(nf);
  for (int nu = 0; nu < nf; ++nu) {
    const double wf = t.fine.weights[nu];
    for (int i = 0; i < q; ++i) {
      std::complex<double> acc = 0.0;
      for (int j = 0; j < q; ++j) {
        acc += sm_inv(i, j) * t.ell_at_fine(j, nu);
      }
      t.b(i, nu) = wf * acc;
    }
    t.c0[nu] = t.ell_hat_at_fine(0, nu);
    for (int i = 0; i < q; ++i) {
      std::complex<double> acc = 0.0;
      for (int j = 0; j < q; ++j) {
        acc += t.ell_hat_at_fine(j + 1, nu) * t.sigma_inv(j, i);
      }
      t.c(i, nu) = acc;
    }
  }
  return t;
}

/// Smallest eigenvalue of the symmetric part of D^{-1/2} M D^{1/2}.
inline double stability_margin(const CollocationTableau& t) {
  const Eigen::MatrixXd herm = 0.5 * (t.stab + t.stab.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(herm, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

struct DecouplingCoefficients {
  Eigen::VectorXcd a;
  Eigen::MatrixXcd b;
  Eigen::VectorXd c0;
  Eigen::MatrixXcd c;
};

inline DecouplingCoefficients decoupling_coefficients(const CollocationTableau& t) {
  return {t.a, t.b, t.c0, t.c};
}

} // namespace cgq
