#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/SparseLU>

#include "cgq/diagnostics.hpp"
#include "cgq/errors.hpp"
#include "cgq/operators.hpp"
#include "cgq/tableau.hpp"

namespace cgq {

struct StepperConfig {
  double tau = 0.0;
  double eps_fp = 1e-12;
  int max_fp_iters = 200;
  double T = 0.0;

  void validate() const {
    if (!(tau > 0.0)) {
      throw ConfigError("tau must be positive");
    }
    if (!(eps_fp > 0.0)) {
      throw ConfigError("eps_fp must be positive");
    }
    if (max_fp_iters < 1) {
      throw ConfigError("max_fp_iters must be >= 1");
    }
    if (!(T >= tau)) {
      throw ConfigError("T must be >= tau");
    }
  }

  long steps() const { return std::lround(T / tau); }
};

/// Transformed stage values U^{n,i} of one step together with the value at t_n.
struct StageState {
  ComplexField u0;
  std::vector<ComplexField> U;
  int fp_iters = 0;
  bool converged = false;
  std::vector<double> update_history; // mass-norm of each fixed-point update
};

class StepFailure : public NumericalError {
public:
  StepFailure(const std::string& what, std::vector<double> history)
      : NumericalError(what), history_(std::move(history)) {}
  const std::vector<double>& history() const { return history_; }

private:
  std::vector<double> history_;
};

using StageSolver = Eigen::SparseLU<ComplexSparse, Eigen::COLAMDOrdering<int>>;

/// LU factorizations of Mass + i tau gamma_i K, one per stage.
struct StageSolvers {
  double tau = 0.0;
  std::vector<std::unique_ptr<StageSolver>> lu;
  std::vector<ComplexSparse> matrices;

  Eigen::VectorXcd solve(int i, const Eigen::VectorXcd& rhs) const { return lu[i]->solve(rhs); }
};

inline StageSolvers prefactorize(const CollocationTableau& tab, const DiscreteOperators& ops,
                                 double tau) {
  if (!(tau > 0.0)) {
    throw ConfigError("prefactorize: tau must be positive");
  }
  StageSolvers s;
  s.tau = tau;
  const ComplexSparse M = ops.mass.cast<Complex>();
  for (int i = 0; i < tab.q; ++i) {
    ComplexSparse A = M + (Complex(0.0, tau) * tab.gamma[i]) * ops.K;
    A.makeCompressed();
    auto lu = std::make_unique<StageSolver>();
    lu->analyzePattern(A);
    lu->factorize(A);
    if (lu->info() != Eigen::Success) {
      throw NumericalError("prefactorize: factorization of stage " + std::to_string(i) +
                           " failed: " + lu->lastErrorMessage());
    }
    s.matrices.push_back(std::move(A));
    s.lu.push_back(std::move(lu));
  }
  return s;
}

/// Value of the degree-q time polynomial at local coordinate s, given the
/// q+1 nodal values u^{n,0}, ..., u^{n,q}.
inline ComplexField reconstruct_in_step(const std::vector<ComplexField>& stage_values,
                                        const CollocationTableau& tab, double s) {
  if (!(s >= 0.0 && s <= 1.0)) {
    throw DataError("reconstruct_in_step: s must lie in [0,1]");
  }
  if (stage_values.size() != static_cast<std::size_t>(tab.q + 1)) {
    throw DataError("reconstruct_in_step: expected q+1 stage values");
  }
  ComplexField out = ComplexField::Zero(stage_values.front().size());
  for (int j = 0; j <= tab.q; ++j) {
    const double l = tab.ell_hat.value(j, s);
    if (l != 0.0) {
      out += l * stage_values[j];
    }
  }
  return out;
}

/// Undoes the sigma transform: returns u^{n,0}, u^{n,1}, ..., u^{n,q}.
inline std::vector<ComplexField> stage_values(const StageState& st, const CollocationTableau& tab) {
  std::vector<ComplexField> out;
  out.reserve(tab.q + 1);
  out.push_back(st.u0);
  for (int j = 0; j < tab.q; ++j) {
    ComplexField v = ComplexField::Zero(st.u0.size());
    for (int i = 0; i < tab.q; ++i) {
      v += tab.sigma_inv(j, i) * st.U[i];
    }
    out.push_back(std::move(v));
  }
  return out;
}

/// Fixed-point solver for one cG(q) step with uniform tau.
class CgStepper {
public:
  CgStepper(const CollocationTableau& tab, const DiscreteOperators& ops, double beta,
            StepperConfig cfg)
      : tab_(tab), ops_(ops), beta_(beta), cfg_(cfg),
        solvers_(prefactorize(tab, ops, cfg.tau)), mass_c_(ops.mass.cast<Complex>()) {
    if (!(cfg_.tau > 0.0) || !(cfg_.eps_fp > 0.0) || cfg_.max_fp_iters < 1) {
      throw ConfigError("CgStepper: invalid tau / eps_fp / max_fp_iters");
    }
  }

  const CollocationTableau& tableau() const { return tab_; }
  const StepperConfig& config() const { return cfg_; }
  const StageSolvers& solvers() const { return solvers_; }

  /// Stage initialization for the first step: the constant-in-time extension
  /// of u0, transformed by sigma.
  StageState initial_state(const ComplexField& u0) const {
    StageState st;
    st.u0 = u0;
    for (int i = 0; i < tab_.q; ++i) {
      st.U.push_back(tab_.a[i] * u0);
    }
    return st;
  }

  /// Solves step n given u(t_n) in st.u0 and warm-start stages in st.U.
  /// On return st.U holds the converged stages; the result is u(t_{n+1}).
  ComplexField step(StageState& st) const {
    const int q = tab_.q;
    const int nf = 2 * q;
    const Eigen::Index n = st.u0.size();
    const Eigen::VectorXcd Mu0 = mass_c_ * st.u0;
    const Complex nl_scale(0.0, -beta_ * cfg_.tau);
    st.update_history.clear();
    st.converged = false;

    std::vector<Eigen::VectorXcd> nl(nf);
    std::vector<ComplexField> next(q);
    for (int k = 0; k < cfg_.max_fp_iters; ++k) {
      if (beta_ != 0.0) {
        for (int nu = 0; nu < nf; ++nu) {
          ComplexField arg = tab_.c0[nu] * st.u0;
          for (int j = 0; j < q; ++j) {
            arg += tab_.c(j, nu) * st.U[j];
          }
          nl[nu] = nonlinear_residual(arg, ops_);
        }
      }
      double upd = 0.0;
      for (int i = 0; i < q; ++i) {
        Eigen::VectorXcd rhs = tab_.a[i] * Mu0;
        if (beta_ != 0.0) {
          Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(n);
          for (int nu = 0; nu < nf; ++nu) {
            acc += tab_.b(i, nu) * nl[nu];
          }
          rhs += nl_scale * acc;
        }
        next[i] = solvers_.solve(i, rhs);
        const ComplexField d = next[i] - st.U[i];
        upd += d.dot(mass_c_ * d).real();
      }
      upd = std::sqrt(std::max(0.0, upd));
      st.update_history.push_back(upd);
      st.U.swap(next);
      st.fp_iters = k + 1;
      // Without the cubic term one linear solve is exact.
      if (beta_ == 0.0 || upd < cfg_.eps_fp) {
        st.converged = true;
        break;
      }
      if (!std::isfinite(upd)) {
        break;
      }
    }
    if (!st.converged) {
      throw StepFailure("fixed-point iteration did not converge in " +
                            std::to_string(st.fp_iters) + " iterations (last update " +
                            std::to_string(st.update_history.back()) + ")",
                        st.update_history);
    }
    return end_value(st);
  }

  /// u(t_{n+1}); identical to reconstruct_in_step(stage_values(st), 1).
  ComplexField end_value(const StageState& st) const {
    return reconstruct_in_step(stage_values(st, tab_), tab_, 1.0);
  }

private:
  const CollocationTableau& tab_;
  const DiscreteOperators& ops_;
  double beta_;
  StepperConfig cfg_;
  StageSolvers solvers_;
  ComplexSparse mass_c_;
};

using ProgressCallback = std::function<void(long n, double t, const ComplexField& u)>;

struct EvolveResult {
  RunDiagnostics diagnostics;
  ComplexField final_field;
  bool completed = false;
  std::string failure;
  long steps_done = 0;
};

/// Marches u0 over N = round(T / tau) uniform steps, recording diagnostics at
/// every node. A step failure stops the run and returns what was computed.
inline EvolveResult evolve(const ComplexField& u0, const GpeProblem& problem,
                           const CollocationTableau& tab, const DiscreteOperators& ops,
                           const StepperConfig& cfg, const ProgressCallback& callback = {},
                           bool force = false) {
  cfg.validate();
  if (u0.size() != ops.size()) {
    throw DataError("evolve: initial field does not match the dof map");
  }
  if (!force) {
    const TrapCheck trap = validate_trap(problem, ops.mesh);
    if (!trap.pass) {
      throw ValidationError("evolve: trap condition fails (worst margin " +
                            std::to_string(trap.worst_margin) + "); use force to override");
    }
  }
  CgStepper stepper(tab, ops, problem.beta, cfg);
  EvolveResult res;
  res.diagnostics.meta = {tab.q, ops.mesh.h, cfg.tau, problem.omega, problem.beta, cfg.eps_fp};
  const long N = cfg.steps();

  ComplexField u = u0;
  StageState st = stepper.initial_state(u0);
  res.diagnostics.rows.push_back(measure(0, 0.0, u, ops, problem.beta, 0));
  if (callback) {
    callback(0, 0.0, u);
  }
  for (long n = 0; n < N; ++n) {
    st.u0 = u;
    try {
      u = stepper.step(st);
    } catch (const StepFailure& e) {
      res.failure = "step " + std::to_string(n) + ": " + e.what();
      res.final_field = u;
      return res;
    }
    const double t = (n + 1) * cfg.tau;
    res.diagnostics.rows.push_back(measure(n + 1, t, u, ops, problem.beta, st.fp_iters));
    res.steps_done = n + 1;
    if (callback) {
      callback(n + 1, t, u);
    }
  }
  res.final_field = std::move(u);
  res.completed = true;
  return res;
}

} // namespace cgq
