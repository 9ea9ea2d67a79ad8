#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <future>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "cgq/diagnostics.hpp"
#include "cgq/errors.hpp"
#include "cgq/io.hpp"
#include "cgq/stepper.hpp"

namespace cgq {

/// Worker count from CGQ_THREADS, defaulting to the machine parallelism.
inline unsigned thread_count() {
  if (const char* env = std::getenv("CGQ_THREADS")) {
    const auto v = detail::parse_int(env);
    if (v && *v >= 1) {
      return static_cast<unsigned>(*v);
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct ConvergenceCell {
  int q = 0;
  double tau = 0.0;
  double error = std::numeric_limits<double>::quiet_NaN();
  bool ok = false;
  std::string failure;
};

struct ConvergenceReport {
  std::vector<ConvergenceCell> cells;
  std::map<int, double> slopes; // only for q with >= 3 successful cells
  int reference_q = 0;
  double reference_tau = 0.0;
};

struct ConvergenceSetup {
  std::vector<int> q_list;
  std::vector<double> tau_list;
  int reference_q = 3;
  double reference_tau = 0.0;
  double T = 0.0;
  double eps_fp = 1e-12;
  int max_fp_iters = 200;
  unsigned threads = 1;
};

inline ComplexField final_state(const ComplexField& u0, const GpeProblem& problem,
                                const DiscreteOperators& ops, int q, double tau, double T,
                                double eps_fp, int max_fp_iters) {
  const CollocationTableau tab = build_tableau(q);
  StepperConfig cfg{tau, eps_fp, max_fp_iters, T};
  const EvolveResult r = evolve(u0, problem, tab, ops, cfg, {}, true);
  if (!r.completed) {
    throw NumericalError(r.failure);
  }
  return r.final_field;
}

/// L2 error at t = T of every (q, tau) cell against one reference trajectory,
/// with a fitted order per q.
inline ConvergenceReport run_convergence_experiment(const ComplexField& u0,
                                                    const GpeProblem& problem,
                                                    const DiscreteOperators& ops,
                                                    const ConvergenceSetup& setup) {
  if (setup.tau_list.empty() || setup.q_list.empty()) {
    throw ConfigError("convergence experiment: tau_list and q_list must be nonempty");
  }
  const double smallest = *std::min_element(setup.tau_list.begin(), setup.tau_list.end());
  if (!(setup.reference_tau > 0.0) || setup.reference_tau * 8.0 > smallest * (1.0 + 1e-12)) {
    throw ConfigError("convergence experiment: reference tau must be 8x smaller than all taus");
  }
  ConvergenceReport rep;
  rep.reference_q = setup.reference_q;
  rep.reference_tau = setup.reference_tau;
  const ComplexField ref = final_state(u0, problem, ops, setup.reference_q, setup.reference_tau,
                                       setup.T, setup.eps_fp, setup.max_fp_iters);

  for (int q : setup.q_list) {
    for (double tau : setup.tau_list) {
      rep.cells.push_back({q, tau});
    }
  }
  auto run_cell = [&](ConvergenceCell& cell) {
    try {
      const ComplexField u = final_state(u0, problem, ops, cell.q, cell.tau, setup.T,
                                         setup.eps_fp, setup.max_fp_iters);
      cell.error = error_norms(u, ref, ops).l2;
      cell.ok = true;
    } catch (const std::exception& e) {
      cell.failure = e.what();
    }
  };
  const unsigned workers = std::max(1u, setup.threads);
  if (workers == 1) {
    for (auto& c : rep.cells) {
      run_cell(c);
    }
  } else {
    for (std::size_t start = 0; start < rep.cells.size(); start += workers) {
      std::vector<std::future<void>> batch;
      for (std::size_t k = start; k < std::min(rep.cells.size(), start + workers); ++k) {
        batch.push_back(std::async(std::launch::async, run_cell, std::ref(rep.cells[k])));
      }
      for (auto& f : batch) {
        f.get();
      }
    }
  }

  for (int q : setup.q_list) {
    std::vector<double> taus, errs;
    for (const auto& c : rep.cells) {
      if (c.q == q && c.ok && c.error > 0.0) {
        taus.push_back(c.tau);
        errs.push_back(c.error);
      }
    }
    if (taus.size() >= 3) {
      rep.slopes[q] = fit_order(taus, errs);
    }
  }
  return rep;
}

inline std::string convergence_csv(const ConvergenceReport& rep) {
  std::string out = "q,tau,error\n";
  for (const auto& c : rep.cells) {
    out += std::to_string(c.q) + ',' + format_double(c.tau) + ',' +
           (c.ok ? format_double(c.error) : std::string("nan")) + '\n';
  }
  return out;
}

inline std::string slopes_csv(const ConvergenceReport& rep) {
  std::string out = "q,slope\n";
  for (const auto& [q, s] : rep.slopes) {
    out += std::to_string(q) + ',' + format_double(s) + '\n';
  }
  return out;
}

} // namespace cgq
