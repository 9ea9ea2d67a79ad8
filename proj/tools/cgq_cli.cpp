// Command-line driver: tableau, validate, groundstate, evolve, converge.
// Exit codes: 0 success, 2 invalid input or failed validation, 1 runtime failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cgq/cgq.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 1;

cgq::GpeProblem dynamics_problem(const cgq::RunConfig& c) {
  cgq::GpeProblem p;
  p.omega = c.Omega;
  p.beta = c.beta;
  p.potential = cgq::Potential::harmonic(c.gamma_x, c.gamma_y);
  p.lambda_margin = c.lambda_margin;
  return p;
}

cgq::GpeProblem ground_state_problem(const cgq::RunConfig& c) {
  cgq::GpeProblem p = dynamics_problem(c);
  p.potential = cgq::Potential::harmonic(c.gs_gamma, c.gs_gamma);
  return p;
}

cgq::GroundStateConfig ground_state_config(const cgq::RunConfig& c) {
  cgq::GroundStateConfig g;
  g.tol = c.gs_tol;
  g.max_iters = c.gs_max_iters;
  g.flow_step = c.gs_flow_step;
  return g;
}

void require_trap(const cgq::GpeProblem& p, const cgq::Mesh& mesh) {
  const auto check = cgq::validate_trap(p, mesh);
  if (!check.pass) {
    throw cgq::ValidationError(
        "trap condition V - (1+lambda)/4 Omega^2 (x^2+y^2) >= 0 fails: worst margin " +
        cgq::format_double(check.worst_margin) + " at (" + cgq::format_double(check.worst_at.x) +
        ", " + cgq::format_double(check.worst_at.y) + ")");
  }
}

cgq::ComplexField load_initial(const fs::path& path, const cgq::RunConfig& c) {
  const auto f = cgq::read_field_file(path);
  if (f.N_h != c.N_h || f.R != c.R) {
    throw cgq::ValidationError("initial field was written for R = " + cgq::format_double(f.R) +
                               ", N_h = " + std::to_string(f.N_h) + " but the config has R = " +
                               cgq::format_double(c.R) + ", N_h = " + std::to_string(c.N_h));
  }
  return f.field;
}

cgq::GroundStateResult compute_ground_state(const cgq::RunConfig& c, const cgq::Mesh& mesh) {
  const auto p = ground_state_problem(c);
  const auto ops = cgq::assemble_operators(mesh, p);
  return cgq::ground_state(ops, p.beta, ground_state_config(c));
}

fs::path prepare_output(const cgq::RunConfig& c) {
  const fs::path dir(c.output_dir);
  fs::create_directories(dir);
  cgq::write_text(dir / "config.cfg", cgq::canonical_config(c));
  return dir;
}

int cmd_tableau(int q, const std::string& out) {
  const auto text = cgq::tableau_csv(cgq::build_tableau(q));
  if (out.empty()) {
    std::cout << text;
  } else {
    cgq::write_text(out, text);
  }
  return 0;
}

int cmd_validate(const std::string& path) {
  const auto c = cgq::load_config(path);
  const auto mesh = cgq::build_mesh(c.R, c.N_h);
  const auto p = dynamics_problem(c);
  cgq::check_potential_nonnegative(mesh, p.potential);
  cgq::check_potential_nonnegative(mesh, ground_state_problem(c).potential);
  const auto check = cgq::validate_trap(p, mesh);
  std::printf("config        %s\n", path.c_str());
  std::printf("mesh          R = %g, N_h = %d, h = %g, dofs = %d\n", c.R, c.N_h, mesh.h,
              (c.N_h - 1) * (c.N_h - 1));
  std::printf("time          q = %d, tau = %g, T = %g, steps = %ld\n", c.q, c.tau, c.T,
              std::lround(c.T / c.tau));
  std::printf("stability     min eig of Hermitian part = %.6g\n",
              cgq::stability_margin(cgq::build_tableau(c.q)));
  std::printf("trap margin   worst = %.6g at (%g, %g), lambda = %g\n", check.worst_margin,
              check.worst_at.x, check.worst_at.y, c.lambda_margin);
  require_trap(p, mesh);
  std::printf("valid\n");
  return 0;
}

int cmd_groundstate(const std::string& path, const std::string& out) {
  const auto c = cgq::load_config(path);
  const auto mesh = cgq::build_mesh(c.R, c.N_h);
  const auto gs = compute_ground_state(c, mesh);
  cgq::FieldFile f;
  f.R = c.R;
  f.N_h = c.N_h;
  f.q = 0;
  f.t = 0.0;
  f.field = gs.field;
  cgq::write_field_file(f, out);
  std::printf("ground state  E = %.15g, mu = %.15g, residual = %.3e, iterations = %d "
              "(rejected %d)\n",
              gs.energy, gs.chemical_potential, gs.residual, gs.iterations, gs.rejected);
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

int cmd_evolve(const std::string& path, const std::string& initial, bool force) {
  const auto c = cgq::load_config(path);
  const auto mesh = cgq::build_mesh(c.R, c.N_h);
  const auto p = dynamics_problem(c);
  if (!force) {
    require_trap(p, mesh);
  }
  const auto ops = cgq::assemble_operators(mesh, p);
  const cgq::ComplexField u0 =
      initial.empty() ? compute_ground_state(c, mesh).field : load_initial(initial, c);
  const auto dir = prepare_output(c);
  const auto tab = cgq::build_tableau(c.q);

  const bool vtk = c.wants_format("vtk") && c.snapshot_stride > 0;
  const long steps = std::lround(c.T / c.tau);
  auto callback = [&](long n, double t, const cgq::ComplexField& u) {
    if (vtk && n % c.snapshot_stride == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "snapshot_%06ld.vtk", n);
      cgq::write_field_vtk(u, ops.mesh, ops.dofs, dir / name, t);
    }
    if (steps >= 10 && n % (steps / 10) == 0) {
      std::fprintf(stderr, "step %ld / %ld\n", n, steps);
    }
  };
  const auto res =
      cgq::evolve(u0, p, tab, ops, {c.tau, c.eps_fp, c.max_fp_iters, c.T}, callback, force);

  cgq::write_timeseries_csv(res.diagnostics, dir / "timeseries.csv");
  cgq::FieldFile f;
  f.R = c.R;
  f.N_h = c.N_h;
  f.q = c.q;
  f.t = res.steps_done * c.tau;
  f.field = res.final_field;
  cgq::write_field_file(f, dir / "final.bin");
  if (c.wants_format("vtk")) {
    cgq::write_field_vtk(res.final_field, ops.mesh, ops.dofs, dir / "final.vtk", f.t);
  }

  std::printf("steps %ld, max relative energy drift %.3e, max relative mass drift %.3e\n",
              res.steps_done, res.diagnostics.max_relative_energy_drift(),
              res.diagnostics.max_relative_mass_drift());
  std::printf("wrote %s\n", dir.string().c_str());
  if (!res.completed) {
    std::fprintf(stderr, "error: %s\n", res.failure.c_str());
    return kExitRuntime;
  }
  return 0;
}

int cmd_converge(const std::string& path, const std::string& initial) {
  const auto c = cgq::load_config(path);
  if (c.tau_list.empty()) {
    throw cgq::ConfigError("converge requires tau_list and reference_tau");
  }
  const auto mesh = cgq::build_mesh(c.R, c.N_h);
  const auto p = dynamics_problem(c);
  require_trap(p, mesh);
  const auto ops = cgq::assemble_operators(mesh, p);
  const cgq::ComplexField u0 =
      initial.empty() ? compute_ground_state(c, mesh).field : load_initial(initial, c);
  const auto dir = prepare_output(c);

  cgq::ConvergenceSetup s;
  s.q_list = c.q_list;
  s.tau_list = c.tau_list;
  s.reference_q = c.reference_q;
  s.reference_tau = c.reference_tau;
  s.T = c.T;
  s.eps_fp = c.eps_fp;
  s.max_fp_iters = c.max_fp_iters;
  s.threads = cgq::thread_count();
  const auto rep = cgq::run_convergence_experiment(u0, p, ops, s);
  cgq::write_text(dir / "convergence.csv", cgq::convergence_csv(rep));
  cgq::write_text(dir / "slopes.csv", cgq::slopes_csv(rep));

  std::cout << cgq::convergence_csv(rep) << cgq::slopes_csv(rep);
  int failed = 0;
  for (const auto& cell : rep.cells) {
    if (!cell.ok) {
      ++failed;
      std::fprintf(stderr, "cell q=%d tau=%g failed: %s\n", cell.q, cell.tau,
                   cell.failure.c_str());
    }
  }
  return failed == 0 ? 0 : kExitRuntime;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-conserving cG(q) solver for the rotating Gross-Pitaevskii equation"};
  app.require_subcommand(1);

  int q = 1;
  std::string tableau_out;
  auto* tableau = app.add_subcommand("tableau", "Print the time-stepping tableau of order q as CSV");
  tableau->add_option("--q", q, "Polynomial degree in time")->required()->check(CLI::Range(1, 12));
  tableau->add_option("-o,--output", tableau_out, "Write to a file instead of stdout");

  std::string config;
  auto* validate = app.add_subcommand("validate", "Parse a run config and check its assumptions");
  validate->add_option("config", config, "Run configuration")->required();

  std::string gs_out;
  auto* groundstate = app.add_subcommand("groundstate", "Compute the initial ground state");
  groundstate->add_option("config", config, "Run configuration")->required();
  groundstate->add_option("-o,--output", gs_out, "Field file to write")->required();

  std::string initial;
  bool force = false;
  auto* evolve = app.add_subcommand("evolve", "Run the time stepper and write diagnostics");
  evolve->add_option("config", config, "Run configuration")->required();
  evolve->add_option("--initial", initial,
                     "Initial field file (default: compute the ground state)");
  evolve->add_flag("--force", force, "Run even if the trap condition fails");

  auto* converge = app.add_subcommand("converge", "Temporal convergence study against a reference");
  converge->add_option("config", config, "Run configuration")->required();
  converge->add_option("--initial", initial,
                       "Initial field file (default: compute the ground state)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*tableau) return cmd_tableau(q, tableau_out);
    if (*validate) return cmd_validate(config);
    if (*groundstate) return cmd_groundstate(config, gs_out);
    if (*evolve) return cmd_evolve(config, initial, force);
    if (*converge) return cmd_converge(config, initial);
  } catch (const cgq::ConfigError& e) {
    std::fprintf(stderr, "invalid configuration: %s\n", e.what());
    return kExitValidation;
  } catch (const cgq::ValidationError& e) {
    std::fprintf(stderr, "validation failed: %s\n", e.what());
    return kExitValidation;
  } catch (const cgq::DataError& e) {
    std::fprintf(stderr, "invalid data: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitRuntime;
}
