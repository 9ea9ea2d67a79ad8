#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCholesky>

#include "cgq/diagnostics.hpp"
#include "cgq/errors.hpp"
#include "cgq/operators.hpp"

namespace cgq {

enum class GroundStateSeed { automatic, vortex, gaussian };

struct GroundStateConfig {
  double tol = 1e-8;
  int max_iters = 20000;
  double flow_step = 0.05;
  double min_flow_step = 1e-8;
  GroundStateSeed seed = GroundStateSeed::automatic;
};

struct GroundStateResult {
  ComplexField field;
  double energy = 0.0;
  double chemical_potential = 0.0;
  double residual = 0.0;
  int iterations = 0;
  int rejected = 0;
  double final_flow_step = 0.0;
  std::vector<double> energy_history;
};

class GroundStateError : public NumericalError {
public:
  GroundStateError(const std::string& what, double last_residual)
      : NumericalError(what), last_residual_(last_residual) {}
  double last_residual() const { return last_residual_; }

private:
  double last_residual_;
};

/// Unit-mass copy of u.
inline ComplexField normalize_mass(const ComplexField& u, const DiscreteOperators& ops) {
  const double m = mass(u, ops);
  if (!(m > 0.0)) {
    throw DataError("normalize_mass: field has zero mass");
  }
  return u / std::sqrt(m);
}

/// (x + i y) exp(-(x^2+y^2)/2) for rotating traps, exp(-(x^2+y^2)/2) otherwise,
/// normalized to unit mass.
inline ComplexField ground_state_seed(const DiscreteOperators& ops, GroundStateSeed seed,
                                      double omega) {
  const bool vortex =
      seed == GroundStateSeed::vortex || (seed == GroundStateSeed::automatic && omega != 0.0);
  const auto fn = [vortex](double x, double y) {
    const double g = std::exp(-0.5 * (x * x + y * y));
    return vortex ? Complex(x, y) * g : Complex(g, 0.0);
  };
  return normalize_mass(interpolate(fn, ops.mesh, ops.dofs), ops);
}

/// M^{-1}-dual norm of the residual K u + beta N(u) - mu M u, and mu.
struct GroundStateResidual {
  double norm = 0.0;
  double mu = 0.0;
};

namespace detail {

class MassInverse {
public:
  explicit MassInverse(const RealSparse& mass) : llt_(mass) {
    if (llt_.info() != Eigen::Success) {
      throw NumericalError("mass matrix factorization failed");
    }
  }
  Eigen::VectorXcd solve(const Eigen::VectorXcd& r) const {
    const Eigen::VectorXd re = llt_.solve(Eigen::VectorXd(r.real()));
    const Eigen::VectorXd im = llt_.solve(Eigen::VectorXd(r.imag()));
    Eigen::VectorXcd out(r.size());
    out.real() = re;
    out.imag() = im;
    return out;
  }

private:
  Eigen::SimplicialLLT<RealSparse> llt_;
};

inline GroundStateResidual gs_residual(const ComplexField& u, const DiscreteOperators& ops,
                                       double beta, const MassInverse& minv) {
  Eigen::VectorXcd Hu = ops.K * u;
  if (beta != 0.0) {
    Hu += beta * nonlinear_residual(u, ops);
  }
  const Eigen::VectorXcd Mu = ops.mass.cast<Complex>() * u;
  const double mu = u.dot(Hu).real() / u.dot(Mu).real();
  const Eigen::VectorXcd r = Hu - mu * Mu;
  return {std::sqrt(std::max(0.0, r.dot(minv.solve(r)).real())), mu};
}

} // namespace detail

/// Density-weighted mass matrix M_rho(i,j) = int |u_h|^2 phi_i phi_j, on the
/// sparsity pattern of the mass matrix (degree-4 rule, exact for P1 u_h).
inline RealSparse density_mass(const ComplexField& u, const DiscreteOperators& ops) {
  const ElementTable& el = ops.elements;
  return detail::assemble_real(el, ops.size(), [&](std::size_t t) {
    detail::Block blk{};
    const auto& d = el.dofs[t];
    Complex nodal[3];
    for (int a = 0; a < 3; ++a) {
      nodal[a] = d[a] >= 0 ? u[d[a]] : Complex{};
    }
    for (std::size_t k = 0; k < el.rule.size(); ++k) {
      const auto& lam = el.rule.points[k];
      const double rho = std::norm(lam[0] * nodal[0] + lam[1] * nodal[1] + lam[2] * nodal[2]);
      const double w = el.area[t] * el.rule.weights[k] * rho;
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
          blk[a][b] += w * lam[a] * lam[b];
        }
      }
    }
    return blk;
  });
}

/// Discrete normalized gradient flow for the minimizer of
/// E_0(u) = 1/2 (u,u)_H + beta/4 int |u|^4 under ||u||_{L^2} = 1.
/// Each step solves (M + dt (K + beta M_rho(u_k))) u* = M u_k and renormalizes;
/// a step that raises the energy is rejected and dt is halved, and dt grows
/// back towards flow_step after accepted steps.
inline GroundStateResult ground_state(const DiscreteOperators& ops, double beta,
                                      const GroundStateConfig& cfg,
                                      std::optional<ComplexField> initial = std::nullopt) {
  if (!(cfg.flow_step > 0.0)) {
    throw ConfigError("ground_state: flow_step must be positive");
  }
  if (!(cfg.tol > 0.0) || cfg.max_iters < 1) {
    throw ConfigError("ground_state: tol must be positive and max_iters >= 1");
  }
  const detail::MassInverse minv(ops.mass);
  const ComplexSparse Mc = ops.mass.cast<Complex>();

  GroundStateResult res;
  ComplexField u = initial ? normalize_mass(*initial, ops)
                           : ground_state_seed(ops, cfg.seed, ops.omega);
  double e = energy(u, ops, beta);
  res.energy_history.push_back(e);

  double dt = cfg.flow_step;
  Eigen::SimplicialLDLT<ComplexSparse> flow;
  bool analyzed = false;
  auto factor = [&] {
    ComplexSparse A = Mc + dt * ops.K;
    if (beta != 0.0) {
      A += (dt * beta) * density_mass(u, ops).cast<Complex>();
    }
    if (!analyzed) {
      flow.analyzePattern(A);
      analyzed = true;
    }
    flow.factorize(A);
    if (flow.info() != Eigen::Success) {
      throw NumericalError("ground_state: flow matrix factorization failed");
    }
  };
  // Linear flows keep one factorization until dt changes.
  bool stale = true;

  auto r = detail::gs_residual(u, ops, beta, minv);
  for (int it = 0; it < cfg.max_iters && r.norm > cfg.tol; ++it) {
    if (stale || beta != 0.0) {
      factor();
      stale = false;
    }
    const ComplexField trial = normalize_mass(flow.solve(Mc * u), ops);
    const double e_trial = energy(trial, ops, beta);
    if (!(e_trial <= e + 1e-12 * std::max(1.0, std::abs(e)))) {
      ++res.rejected;
      dt *= 0.5;
      stale = true;
      if (dt < cfg.min_flow_step) {
        throw GroundStateError("ground_state: flow step underflow", r.norm);
      }
      continue;
    }
    u = trial;
    e = e_trial;
    res.energy_history.push_back(e);
    ++res.iterations;
    if (dt < cfg.flow_step) {
      dt = std::min(cfg.flow_step, 1.5 * dt);
      stale = true;
    }
    r = detail::gs_residual(u, ops, beta, minv);
  }
  if (r.norm > cfg.tol) {
    throw GroundStateError("ground_state: no convergence in " + std::to_string(cfg.max_iters) +
                               " iterations (residual " + std::to_string(r.norm) + ")",
                           r.norm);
  }
  res.field = std::move(u);
  res.energy = e;
  res.chemical_potential = r.mu;
  res.residual = r.norm;
  res.final_flow_step = dt;
  return res;
}

} // namespace cgq
