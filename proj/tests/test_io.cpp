#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "cgq/experiment.hpp"
#include "cgq/io.hpp"

using cgq::Complex;

namespace {

const char* kExperimentOne = R"(# rotating trap, convergence protocol
R = 20
N_h = 128
Omega = 1.6
beta = 200
gamma_x = 0.9
gamma_y = 1.1
T = 0.1
q = 3
tau = 0.00078125
eps_fp = 1e-12
)";

std::string message_of(const std::string& text) {
  try {
    cgq::parse_config(text);
  } catch (const cgq::ConfigError& e) {
    return e.what();
  }
  return {};
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("cgq_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

int count_lines(const std::string& text, const std::string& prefix) {
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    n += line.rfind(prefix, 0) == 0;
  }
  return n;
}

} // namespace

TEST(Config, ExperimentOneParses) {
  const auto c = cgq::parse_config(kExperimentOne);
  EXPECT_EQ(c.R, 20.0);
  EXPECT_EQ(c.N_h, 128);
  EXPECT_EQ(c.Omega, 1.6);
  EXPECT_EQ(c.beta, 200.0);
  EXPECT_EQ(c.gamma_x, 0.9);
  EXPECT_EQ(c.gamma_y, 1.1);
  EXPECT_EQ(c.q, 3);
  EXPECT_EQ(c.tau, 0.1 / 128.0);
  EXPECT_EQ(c.eps_fp, 1e-12);
  EXPECT_EQ(c.max_fp_iters, 200);
  EXPECT_TRUE(c.wants_format("csv"));
  EXPECT_FALSE(c.wants_format("vtk"));
}

TEST(Config, NegativeBetaCitesRepulsiveAssumption) {
  std::string text = kExperimentOne;
  text.replace(text.find("beta = 200"), 10, "beta = -1");
  const auto msg = message_of(text);
  EXPECT_NE(msg.find("repulsive"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 5"), std::string::npos) << msg;
}

TEST(Config, UnknownKeyReportsLine) {
  const auto msg = message_of(std::string(kExperimentOne) + "gamma_z = 1.0\n");
  EXPECT_NE(msg.find("line 12"), std::string::npos) << msg;
  EXPECT_NE(msg.find("gamma_z"), std::string::npos) << msg;
}

TEST(Config, OtherErrors) {
  EXPECT_NE(message_of("R = 1\n").find("missing required key"), std::string::npos);
  EXPECT_NE(message_of(std::string(kExperimentOne) + "R = 3\n").find("duplicate"),
            std::string::npos);
  EXPECT_NE(message_of(std::string(kExperimentOne) + "max_fp_iters = 2.5\n").find("integer"),
            std::string::npos);
  EXPECT_NE(message_of(std::string(kExperimentOne) + "just words\n").find("key = value"),
            std::string::npos);
  EXPECT_NE(message_of(std::string(kExperimentOne) + "formats = csv, png\n").find("png"),
            std::string::npos);
  EXPECT_NE(message_of(std::string(kExperimentOne) + "tau_list = 0.1, 0.05\nreference_tau = 0.01\n")
                .find("8 times"),
            std::string::npos);
  EXPECT_THROW(cgq::load_config("/nonexistent/run.cfg"), cgq::IoError);
}

TEST(Config, CanonicalEchoReparsesToSameValues) {
  const auto c = cgq::parse_config(std::string(kExperimentOne) +
                                   "tau_list = 0.0125, 0.00625, 0.003125\n"
                                   "reference_tau = 0.0001953125\nformats = csv, vtk\n");
  const auto echo = cgq::canonical_config(c);
  const auto back = cgq::parse_config(echo);
  EXPECT_EQ(cgq::canonical_config(back), echo);
  EXPECT_EQ(back.tau_list, c.tau_list);
  EXPECT_EQ(back.formats, c.formats);
}

TEST(TimeseriesCsv, OneStepRunHasTwoRowsAndRoundTrips) {
  cgq::GpeProblem p;
  p.omega = 1.0;
  p.beta = 10.0;
  p.potential = cgq::Potential::harmonic(1.0, 1.0);
  const auto ops = cgq::assemble_operators(cgq::build_mesh(3.0, 8), p);
  const auto u0 = cgq::interpolate(
      [](double x, double y) { return Complex(x, y) * std::exp(-(x * x + y * y) / 3.0); }, ops.mesh,
      ops.dofs);
  const auto res = cgq::evolve(u0, p, cgq::build_tableau(2), ops, {0.1, 1e-12, 200, 0.1});
  ASSERT_TRUE(res.completed);
  const auto text = cgq::timeseries_csv(res.diagnostics);
  EXPECT_EQ(text.substr(0, text.find('\n')), cgq::kTimeseriesHeader);
  EXPECT_EQ(text.find('\r'), std::string::npos);
  const auto rows = cgq::parse_timeseries_csv(text);
  ASSERT_EQ(rows.size(), 2u);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& a = rows[k];
    const auto& b = res.diagnostics.rows[k];
    EXPECT_EQ(a.n, b.n);
    EXPECT_EQ(a.t, b.t);
    EXPECT_EQ(a.energy, b.energy);
    EXPECT_EQ(a.mass, b.mass);
    EXPECT_EQ(a.angular_momentum, b.angular_momentum);
    EXPECT_EQ(a.sup_norm, b.sup_norm);
    EXPECT_EQ(a.fp_iters, b.fp_iters);
  }
  EXPECT_THROW(cgq::parse_timeseries_csv("n,t\n"), cgq::DataError);
  EXPECT_THROW(cgq::parse_timeseries_csv(std::string(cgq::kTimeseriesHeader) + "\n0,x,1,1,1,1,0\n"),
               cgq::DataError);
  EXPECT_THROW(cgq::write_timeseries_csv(cgq::RunDiagnostics{}, "unused.csv"), cgq::DataError);
  EXPECT_THROW(cgq::write_timeseries_csv(res.diagnostics, "/nonexistent/dir/ts.csv"), cgq::IoError);
}

TEST(Vtk, SmallestMeshCountsBoundaryAndDensity) {
  const auto mesh = cgq::build_mesh(1.0, 2);
  const auto dofs = cgq::build_dofmap(mesh);
  cgq::ComplexField u(1);
  u[0] = Complex(0.6, -0.8);
  const auto text = cgq::field_vtk(u, mesh, dofs);
  EXPECT_EQ(text.rfind("# vtk DataFile Version 3.0\n", 0), 0u);
  EXPECT_NE(text.find("POINTS 9 double"), std::string::npos);
  EXPECT_NE(text.find("CELLS 8 32"), std::string::npos);
  EXPECT_EQ(count_lines(text, "3 "), 8);

  // density block follows its header; the centre vertex is id 4.
  const auto pos = text.find("SCALARS density double 1\nLOOKUP_TABLE default\n");
  ASSERT_NE(pos, std::string::npos);
  std::istringstream in(text.substr(pos));
  std::string skip;
  std::getline(in, skip);
  std::getline(in, skip);
  for (int v = 0; v < 9; ++v) {
    double d = -1.0;
    in >> d;
    EXPECT_EQ(d, v == 4 ? 0.6 * 0.6 + 0.8 * 0.8 : 0.0) << "vertex " << v;
  }
}

TEST(Vtk, DensityEqualsSquaredModulusEverywhere) {
  const auto mesh = cgq::build_mesh(2.0, 6);
  const auto dofs = cgq::build_dofmap(mesh);
  std::srand(8);
  const cgq::ComplexField u = cgq::ComplexField::Random(dofs.n_dofs);
  const auto text = cgq::field_vtk(u, mesh, dofs);
  auto block = [&](const std::string& name) {
    std::istringstream in(text.substr(text.find("SCALARS " + name)));
    std::string skip;
    std::getline(in, skip);
    std::getline(in, skip);
    std::vector<double> v(mesh.vertices.size());
    for (auto& x : v) {
      in >> x;
    }
    return v;
  };
  const auto re = block("re");
  const auto im = block("im");
  const auto rho = block("density");
  for (std::size_t k = 0; k < rho.size(); ++k) {
    EXPECT_NEAR(rho[k], re[k] * re[k] + im[k] * im[k], 1e-15);
  }
}

TEST(FieldFile, RoundTripAndCorruption) {
  const auto dir = scratch_dir("field");
  cgq::FieldFile f;
  f.R = 8.0;
  f.N_h = 5;
  f.q = 2;
  f.t = 0.25;
  std::srand(1);
  f.field = cgq::ComplexField::Random(16);
  const auto path = dir / "u.bin";
  cgq::write_field_file(f, path);
  EXPECT_EQ(std::filesystem::file_size(path), cgq::kFieldHeaderBytes + 16u * 16u);
  const auto back = cgq::read_field_file(path);
  EXPECT_EQ(back.R, f.R);
  EXPECT_EQ(back.N_h, f.N_h);
  EXPECT_EQ(back.q, f.q);
  EXPECT_EQ(back.t, f.t);
  EXPECT_EQ((back.field - f.field).cwiseAbs().maxCoeff(), 0.0);

  auto bytes = cgq::encode_field(f);
  EXPECT_THROW(cgq::decode_field(bytes.substr(0, bytes.size() - 8)), cgq::DataError);
  EXPECT_THROW(cgq::decode_field(bytes + "x"), cgq::DataError);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(cgq::decode_field(bad_magic), cgq::DataError);
  auto bad_nh = bytes;
  bad_nh[12] = 6; // header N_h no longer matches n_dofs
  EXPECT_THROW(cgq::decode_field(bad_nh), cgq::DataError);
  f.N_h = 6;
  EXPECT_THROW(cgq::encode_field(f), cgq::DataError);
  EXPECT_THROW(cgq::read_field_file(dir / "missing.bin"), cgq::IoError);
}

TEST(Tableau, CsvListsEveryQuantity) {
  const auto text = cgq::tableau_csv(cgq::build_tableau(2));
  EXPECT_EQ(text.rfind("quantity,i,j,real,imag\n", 0), 0u);
  for (const char* q : {"gl_node", "m,", "A,", "sigma", "gamma", "a,", "b,", "c0", "c,",
                        "stability_margin"}) {
    EXPECT_GT(count_lines(text, q), 0) << q;
  }
  EXPECT_EQ(count_lines(text, "b,"), 2 * 4);
}

namespace {

struct SmallExperiment {
  cgq::GpeProblem problem;
  cgq::DiscreteOperators ops;
  cgq::ComplexField u0;

  SmallExperiment() {
    problem.omega = 1.0;
    problem.beta = 20.0;
    problem.potential = cgq::Potential::harmonic(1.0, 1.0);
    ops = cgq::assemble_operators(cgq::build_mesh(4.0, 12), problem);
    u0 = cgq::interpolate(
        [](double x, double y) { return Complex(x + 0.5, y) * std::exp(-0.5 * (x * x + y * y)); },
        ops.mesh, ops.dofs);
  }
};

} // namespace

TEST(Convergence, SingleTauGivesOneRowAndNoSlope) {
  const SmallExperiment ex;
  cgq::ConvergenceSetup s;
  s.q_list = {1};
  s.tau_list = {0.05};
  s.reference_q = 2;
  s.reference_tau = 0.05 / 8;
  s.T = 0.1;
  const auto rep = cgq::run_convergence_experiment(ex.u0, ex.problem, ex.ops, s);
  ASSERT_EQ(rep.cells.size(), 1u);
  EXPECT_TRUE(rep.cells[0].ok);
  EXPECT_GT(rep.cells[0].error, 0.0);
  EXPECT_TRUE(rep.slopes.empty());
  EXPECT_EQ(cgq::slopes_csv(rep), "q,slope\n");
  EXPECT_EQ(count_lines(cgq::convergence_csv(rep), "1,"), 1);
}

TEST(Convergence, FailedCellIsRecordedAndOthersContinue) {
  const SmallExperiment ex;
  cgq::ConvergenceSetup s;
  s.q_list = {13, 1}; // no tableau beyond order 12
  s.tau_list = {0.05, 0.025, 0.0125};
  s.reference_q = 2;
  s.reference_tau = 0.0125 / 8;
  s.T = 0.05;
  const auto rep = cgq::run_convergence_experiment(ex.u0, ex.problem, ex.ops, s);
  ASSERT_EQ(rep.cells.size(), 6u);
  for (const auto& c : rep.cells) {
    EXPECT_EQ(c.ok, c.q == 1);
    if (!c.ok) {
      EXPECT_FALSE(c.failure.empty());
      EXPECT_TRUE(std::isnan(c.error));
    }
  }
  EXPECT_EQ(count_lines(cgq::convergence_csv(rep), "13,"), 3);
  EXPECT_NE(cgq::convergence_csv(rep).find(",nan\n"), std::string::npos);
  EXPECT_EQ(rep.slopes.count(13), 0u);
  EXPECT_EQ(rep.slopes.count(1), 1u);

  s.reference_tau = 0.01;
  EXPECT_THROW(cgq::run_convergence_experiment(ex.u0, ex.problem, ex.ops, s), cgq::ConfigError);
}

TEST(Convergence, DeterministicOutputSingleThreaded) {
  const SmallExperiment ex;
  cgq::ConvergenceSetup s;
  s.q_list = {1, 2};
  s.tau_list = {0.05, 0.025, 0.0125};
  s.reference_q = 3;
  s.reference_tau = 0.0125 / 8;
  s.T = 0.05;
  const auto a = cgq::run_convergence_experiment(ex.u0, ex.problem, ex.ops, s);
  const auto b = cgq::run_convergence_experiment(ex.u0, ex.problem, ex.ops, s);
  EXPECT_EQ(cgq::convergence_csv(a), cgq::convergence_csv(b));
  EXPECT_EQ(cgq::slopes_csv(a), cgq::slopes_csv(b));
  s.threads = 3;
  const auto c = cgq::run_convergence_experiment(ex.u0, ex.problem, ex.ops, s);
  EXPECT_EQ(cgq::convergence_csv(a), cgq::convergence_csv(c));
  ASSERT_EQ(a.slopes.size(), 2u);
  EXPECT_GT(a.slopes.at(1), 1.7);
  EXPECT_GT(a.slopes.at(2), 3.5);
}
