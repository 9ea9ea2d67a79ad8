#pragma once

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cgq/diagnostics.hpp"
#include "cgq/errors.hpp"
#include "cgq/mesh.hpp"
#include "cgq/tableau.hpp"

namespace cgq {

/// Formats a double with 17 significant digits (exact round trip).
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------- config

/// Flat key = value run configuration.
struct RunConfig {
  // domain
  double R = 0.0;
  int N_h = 0;
  // physics
  double Omega = 0.0;
  double beta = 0.0;
  double gamma_x = 1.0;
  double gamma_y = 1.0;
  double lambda_margin = 0.1;
  // time
  int q = 1;
  double tau = 0.0;
  double T = 0.0;
  // solver
  double eps_fp = 1e-12;
  int max_fp_iters = 200;
  // ground state (isotropic trap (gs_gamma x)^2 + (gs_gamma y)^2)
  double gs_gamma = 1.0;
  double gs_tol = 1e-8;
  int gs_max_iters = 20000;
  double gs_flow_step = 0.05;
  // convergence study
  std::vector<double> tau_list;
  std::vector<int> q_list{1, 2};
  int reference_q = 3;
  double reference_tau = 0.0;
  // io
  std::string output_dir = "out";
  int snapshot_stride = 0;
  std::vector<std::string> formats{"csv"};

  bool wants_format(std::string_view f) const {
    return std::find(formats.begin(), formats.end(), f) != formats.end();
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto end = comma == std::string_view::npos ? s.size() : comma;
    out.push_back(trim(s.substr(start, end - start)));
    if (comma == std::string_view::npos) {
      break;
    }
    start = comma + 1;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

inline std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    return std::nullopt;
  }
  return v;
}

} // namespace detail

/// Parses and validates a configuration. Errors name the offending line.
inline RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::map<std::string, int> seen;

  auto fail = [](int line, const std::string& msg) -> void {
    throw ConfigError("line " + std::to_string(line) + ": " + msg);
  };

  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view sv(raw);
    if (const auto hash = sv.find('#'); hash != std::string_view::npos) {
      sv = sv.substr(0, hash);
    }
    const std::string line = detail::trim(sv);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(lineno, "expected 'key = value'");
    }
    const std::string key = detail::trim(std::string_view(line).substr(0, eq));
    const std::string val = detail::trim(std::string_view(line).substr(eq + 1));
    if (seen.count(key)) {
      fail(lineno, "duplicate key '" + key + "' (first on line " +
                       std::to_string(seen[key]) + ")");
    }
    if (val.empty()) {
      fail(lineno, "empty value for '" + key + "'");
    }

    auto as_double = [&](double& dst) {
      const auto v = detail::parse_double(val);
      if (!v) {
        fail(lineno, "'" + key + "' expects a real number, got '" + val + "'");
      }
      dst = *v;
    };
    auto as_int = [&](int& dst) {
      const auto v = detail::parse_int(val);
      if (!v) {
        fail(lineno, "'" + key + "' expects an integer, got '" + val + "'");
      }
      dst = *v;
    };

    if (key == "R") as_double(cfg.R);
    else if (key == "N_h") as_int(cfg.N_h);
    else if (key == "Omega") as_double(cfg.Omega);
    else if (key == "beta") as_double(cfg.beta);
    else if (key == "gamma_x") as_double(cfg.gamma_x);
    else if (key == "gamma_y") as_double(cfg.gamma_y);
    else if (key == "lambda_margin") as_double(cfg.lambda_margin);
    else if (key == "q") as_int(cfg.q);
    else if (key == "tau") as_double(cfg.tau);
    else if (key == "T") as_double(cfg.T);
    else if (key == "eps_fp") as_double(cfg.eps_fp);
    else if (key == "max_fp_iters") as_int(cfg.max_fp_iters);
    else if (key == "gs_gamma") as_double(cfg.gs_gamma);
    else if (key == "gs_tol") as_double(cfg.gs_tol);
    else if (key == "gs_max_iters") as_int(cfg.gs_max_iters);
    else if (key == "gs_flow_step") as_double(cfg.gs_flow_step);
    else if (key == "reference_q") as_int(cfg.reference_q);
    else if (key == "reference_tau") as_double(cfg.reference_tau);
    else if (key == "snapshot_stride") as_int(cfg.snapshot_stride);
    else if (key == "output_dir") cfg.output_dir = val;
    else if (key == "tau_list") {
      cfg.tau_list.clear();
      for (const auto& item : detail::split_list(val)) {
        const auto v = detail::parse_double(item);
        if (!v) {
          fail(lineno, "'tau_list' expects real numbers, got '" + item + "'");
        }
        cfg.tau_list.push_back(*v);
      }
    } else if (key == "q_list") {
      cfg.q_list.clear();
      for (const auto& item : detail::split_list(val)) {
        const auto v = detail::parse_int(item);
        if (!v) {
          fail(lineno, "'q_list' expects integers, got '" + item + "'");
        }
        cfg.q_list.push_back(*v);
      }
    } else if (key == "formats") {
      cfg.formats = detail::split_list(val);
      for (const auto& f : cfg.formats) {
        if (f != "csv" && f != "vtk" && f != "field") {
          fail(lineno, "unknown format '" + f + "' (expected csv, vtk, field)");
        }
      }
    } else {
      fail(lineno, "unknown key '" + key + "'");
    }
    seen[key] = lineno;
  }

  for (const char* req : {"R", "N_h", "Omega", "beta", "q", "tau", "T"}) {
    if (!seen.count(req)) {
      throw ConfigError(std::string("missing required key '") + req + "'");
    }
  }
  auto check = [&](bool ok, const std::string& key, const std::string& msg) {
    if (!ok) {
      throw ConfigError("line " + std::to_string(seen.count(key) ? seen[key] : 0) + ": " + msg);
    }
  };
  check(cfg.R > 0.0, "R", "R must be positive");
  check(cfg.N_h >= 2, "N_h", "N_h must be >= 2");
  check(cfg.beta >= 0.0, "beta",
        "beta must be >= 0 (repulsive interaction)");
  check(cfg.lambda_margin > 0.0, "lambda_margin", "lambda_margin must be positive");
  check(cfg.q >= 1 && cfg.q <= kMaxTimeOrder, "q", "q must be in [1, 12]");
  check(cfg.tau > 0.0, "tau", "tau must be positive");
  check(cfg.T >= cfg.tau, "T", "T must be >= tau");
  check(cfg.eps_fp > 0.0, "eps_fp", "eps_fp must be positive");
  check(cfg.max_fp_iters >= 1, "max_fp_iters", "max_fp_iters must be >= 1");
  check(cfg.gs_tol > 0.0, "gs_tol", "gs_tol must be positive");
  check(cfg.gs_max_iters >= 1, "gs_max_iters", "gs_max_iters must be >= 1");
  check(cfg.gs_flow_step > 0.0, "gs_flow_step", "gs_flow_step must be positive");
  check(cfg.snapshot_stride >= 0, "snapshot_stride", "snapshot_stride must be >= 0");
  for (double t : cfg.tau_list) {
    check(t > 0.0, "tau_list", "tau_list entries must be positive");
  }
  for (int qq : cfg.q_list) {
    check(qq >= 1 && qq <= kMaxTimeOrder, "q_list", "q_list entries must be in [1, 12]");
  }
  check(cfg.reference_q >= 1 && cfg.reference_q <= kMaxTimeOrder, "reference_q",
        "reference_q must be in [1, 12]");
  if (!cfg.tau_list.empty()) {
    check(seen.count("reference_tau") > 0, "tau_list",
          "tau_list requires reference_tau");
    const double smallest = *std::min_element(cfg.tau_list.begin(), cfg.tau_list.end());
    check(cfg.reference_tau > 0.0 && cfg.reference_tau * 8.0 <= smallest * (1.0 + 1e-12),
          "reference_tau", "reference_tau must be at least 8 times smaller than every tau_list entry");
  }
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot read config '" + path.string() + "'");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Canonical key = value dump (sorted keys, 17-digit reals).
inline std::string canonical_config(const RunConfig& c) {
  std::map<std::string, std::string> kv;
  auto list_d = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) {
      s += (k ? ", " : "") + format_double(v[k]);
    }
    return s;
  };
  kv["R"] = format_double(c.R);
  kv["N_h"] = std::to_string(c.N_h);
  kv["Omega"] = format_double(c.Omega);
  kv["beta"] = format_double(c.beta);
  kv["gamma_x"] = format_double(c.gamma_x);
  kv["gamma_y"] = format_double(c.gamma_y);
  kv["lambda_margin"] = format_double(c.lambda_margin);
  kv["q"] = std::to_string(c.q);
  kv["tau"] = format_double(c.tau);
  kv["T"] = format_double(c.T);
  kv["eps_fp"] = format_double(c.eps_fp);
  kv["max_fp_iters"] = std::to_string(c.max_fp_iters);
  kv["gs_gamma"] = format_double(c.gs_gamma);
  kv["gs_tol"] = format_double(c.gs_tol);
  kv["gs_max_iters"] = std::to_string(c.gs_max_iters);
  kv["gs_flow_step"] = format_double(c.gs_flow_step);
  if (!c.tau_list.empty()) {
    kv["tau_list"] = list_d(c.tau_list);
    kv["reference_tau"] = format_double(c.reference_tau);
  }
  std::string ql;
  for (std::size_t k = 0; k < c.q_list.size(); ++k) {
    ql += (k ? ", " : "") + std::to_string(c.q_list[k]);
  }
  kv["q_list"] = ql;
  kv["reference_q"] = std::to_string(c.reference_q);
  kv["output_dir"] = c.output_dir;
  kv["snapshot_stride"] = std::to_string(c.snapshot_stride);
  std::string fm;
  for (std::size_t k = 0; k < c.formats.size(); ++k) {
    fm += (k ? ", " : "") + c.formats[k];
  }
  kv["formats"] = fm;
  std::string out = "# canonical run configuration\n# field-file mass convention: initial data normalized to unit L2 mass\n";
  for (const auto& [k, v] : kv) {
    out += k + " = " + v + "\n";
  }
  return out;
}

// ---------------------------------------------------------------- csv

inline constexpr std::string_view kTimeseriesHeader =
    "n,t,energy,mass,angular_momentum,sup_norm,fp_iters";

inline std::string timeseries_csv(const RunDiagnostics& d) {
  std::string out(kTimeseriesHeader);
  out += '\n';
  for (const auto& r : d.rows) {
    out += std::to_string(r.n) + ',' + format_double(r.t) + ',' + format_double(r.energy) + ',' +
           format_double(r.mass) + ',' + format_double(r.angular_momentum) + ',' +
           format_double(r.sup_norm) + ',' + std::to_string(r.fp_iters) + '\n';
  }
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write '" + path.string() + "'");
  }
  out << text;
  if (!out) {
    throw IoError("write to '" + path.string() + "' failed");
  }
}

inline void write_timeseries_csv(const RunDiagnostics& d, const std::filesystem::path& path) {
  if (d.rows.empty()) {
    throw DataError("write_timeseries_csv: no diagnostics rows");
  }
  write_text(path, timeseries_csv(d));
}

inline std::vector<DiagnosticsRow> parse_timeseries_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kTimeseriesHeader) {
    throw DataError("timeseries csv: bad header");
  }
  std::vector<DiagnosticsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    const auto f = detail::split_list(line);
    if (f.size() != 7) {
      throw DataError("timeseries csv: expected 7 fields");
    }
    auto real = [&](std::size_t k) {
      const auto v = detail::parse_double(f[k]);
      if (!v) {
        throw DataError("timeseries csv: bad number '" + f[k] + "'");
      }
      return *v;
    };
    auto integer = [&](std::size_t k) {
      const auto v = detail::parse_int(f[k]);
      if (!v) {
        throw DataError("timeseries csv: bad integer '" + f[k] + "'");
      }
      return *v;
    };
    DiagnosticsRow r;
    r.n = integer(0);
    r.t = real(1);
    r.energy = real(2);
    r.mass = real(3);
    r.angular_momentum = real(4);
    r.sup_norm = real(5);
    r.fp_iters = integer(6);
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------- field file
//
// Little-endian layout:
//   char[8]  magic "CGQFIELD"
//   u32      version (1)
//   u32      N_h
//   f64      R
//   u32      q (0 when the field is not tied to a time order)
//   u32      reserved (0)
//   f64      t
//   u64      n_dofs = (N_h - 1)^2
//   f64[2 n_dofs] interleaved (re, im) in row-major dof order

inline constexpr char kFieldMagic[8] = {'C', 'G', 'Q', 'F', 'I', 'E', 'L', 'D'};
inline constexpr std::uint32_t kFieldVersion = 1;
inline constexpr std::size_t kFieldHeaderBytes = 8 + 4 + 4 + 8 + 4 + 4 + 8 + 8;

struct FieldFile {
  double R = 0.0;
  int N_h = 0;
  int q = 0;
  double t = 0.0;
  ComplexField field;
};

namespace detail {

inline void put_u32(std::string& b, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) b.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}
inline void put_u64(std::string& b, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) b.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}
inline void put_f64(std::string& b, double v) { put_u64(b, std::bit_cast<std::uint64_t>(v)); }

inline std::uint64_t get_uint(std::string_view b, std::size_t off, int bytes) {
  std::uint64_t v = 0;
  for (int k = 0; k < bytes; ++k) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[off + k])) << (8 * k);
  }
  return v;
}
inline double get_f64(std::string_view b, std::size_t off) {
  return std::bit_cast<double>(get_uint(b, off, 8));
}

} // namespace detail

inline std::string encode_field(const FieldFile& f) {
  const std::uint64_t n = static_cast<std::uint64_t>(f.N_h - 1) * (f.N_h - 1);
  if (static_cast<std::uint64_t>(f.field.size()) != n) {
    throw DataError("encode_field: field length does not match (N_h-1)^2");
  }
  std::string b(kFieldMagic, 8);
  detail::put_u32(b, kFieldVersion);
  detail::put_u32(b, static_cast<std::uint32_t>(f.N_h));
  detail::put_f64(b, f.R);
  detail::put_u32(b, static_cast<std::uint32_t>(f.q));
  detail::put_u32(b, 0);
  detail::put_f64(b, f.t);
  detail::put_u64(b, n);
  b.reserve(b.size() + 16 * n);
  for (Eigen::Index k = 0; k < f.field.size(); ++k) {
    detail::put_f64(b, f.field[k].real());
    detail::put_f64(b, f.field[k].imag());
  }
  return b;
}

inline FieldFile decode_field(std::string_view b) {
  if (b.size() < kFieldHeaderBytes || b.substr(0, 8) != std::string_view(kFieldMagic, 8)) {
    throw DataError("field file: bad magic or truncated header");
  }
  if (detail::get_uint(b, 8, 4) != kFieldVersion) {
    throw DataError("field file: unsupported version");
  }
  FieldFile f;
  f.N_h = static_cast<int>(detail::get_uint(b, 12, 4));
  f.R = detail::get_f64(b, 16);
  f.q = static_cast<int>(detail::get_uint(b, 24, 4));
  f.t = detail::get_f64(b, 32);
  const std::uint64_t n = detail::get_uint(b, 40, 8);
  if (f.N_h < 2 || n != static_cast<std::uint64_t>(f.N_h - 1) * (f.N_h - 1)) {
    throw DataError("field file: dof count does not match N_h");
  }
  if (b.size() != kFieldHeaderBytes + 16 * n) {
    throw DataError("field file: payload length does not match header");
  }
  f.field.resize(static_cast<Eigen::Index>(n));
  for (std::uint64_t k = 0; k < n; ++k) {
    const std::size_t off = kFieldHeaderBytes + 16 * k;
    f.field[static_cast<Eigen::Index>(k)] = {detail::get_f64(b, off), detail::get_f64(b, off + 8)};
  }
  return f;
}

inline void write_field_file(const FieldFile& f, const std::filesystem::path& path) {
  write_text(path, encode_field(f));
}

inline FieldFile read_field_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot read field file '" + path.string() + "'");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return decode_field(ss.str());
}

// ---------------------------------------------------------------- vtk

/// Legacy ASCII VTK unstructured grid over all mesh vertices (boundary values
/// are zero) with point arrays re, im, density.
inline std::string field_vtk(const ComplexField& u, const Mesh& mesh, const DofMap& dofs,
                             double t = 0.0) {
  const Eigen::VectorXcd full = expand_to_vertices(u, mesh, dofs);
  std::string out;
  out += "# vtk DataFile Version 3.0\n";
  out += "cgq field t=" + format_double(t) + "\n";
  out += "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  out += "POINTS " + std::to_string(mesh.vertices.size()) + " double\n";
  for (const auto& p : mesh.vertices) {
    out += format_double(p.x) + ' ' + format_double(p.y) + " 0\n";
  }
  const std::size_t nt = mesh.triangles.size();
  out += "CELLS " + std::to_string(nt) + ' ' + std::to_string(4 * nt) + '\n';
  for (const auto& tri : mesh.triangles) {
    out += "3 " + std::to_string(tri[0]) + ' ' + std::to_string(tri[1]) + ' ' +
           std::to_string(tri[2]) + '\n';
  }
  out += "CELL_TYPES " + std::to_string(nt) + '\n';
  for (std::size_t k = 0; k < nt; ++k) {
    out += "5\n";
  }
  out += "POINT_DATA " + std::to_string(mesh.vertices.size()) + '\n';
  auto scalar = [&](const char* name, auto&& value) {
    out += std::string("SCALARS ") + name + " double 1\nLOOKUP_TABLE default\n";
    for (Eigen::Index k = 0; k < full.size(); ++k) {
      out += format_double(value(full[k])) + '\n';
    }
  };
  scalar("re", [](Complex z) { return z.real(); });
  scalar("im", [](Complex z) { return z.imag(); });
  scalar("density", [](Complex z) { return z.real() * z.real() + z.imag() * z.imag(); });
  return out;
}

inline void write_field_vtk(const ComplexField& u, const Mesh& mesh, const DofMap& dofs,
                            const std::filesystem::path& path, double t = 0.0) {
  write_text(path, field_vtk(u, mesh, dofs, t));
}

// ---------------------------------------------------------------- tableau

/// Every tableau constant as rows quantity,i,j,real,imag (zero-based indices).
inline std::string tableau_csv(const CollocationTableau& t) {
  std::string out = "quantity,i,j,real,imag\n";
  auto row = [&](const char* name, int i, int j, Complex v) {
    out += std::string(name) + ',' + std::to_string(i) + ',' + std::to_string(j) + ',' +
           format_double(v.real()) + ',' + format_double(v.imag()) + '\n';
  };
  const int q = t.q;
  for (int j = 0; j < q; ++j) row("gl_node", j, 0, t.gauss.nodes[j]);
  for (int j = 0; j < q; ++j) row("gl_weight", j, 0, t.gauss.weights[j]);
  for (int j = 0; j < 2 * q; ++j) row("fine_node", j, 0, t.fine.nodes[j]);
  for (int j = 0; j < 2 * q; ++j) row("fine_weight", j, 0, t.fine.weights[j]);
  for (int i = 0; i < q; ++i)
    for (int j = 0; j <= q; ++j) row("m", i, j, t.m(i, j));
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j) row("stab", i, j, t.stab(i, j));
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j) row("A", i, j, t.A(i, j));
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j) row("sigma", i, j, t.sigma(i, j));
  for (int i = 0; i < q; ++i) row("gamma", i, 0, t.gamma[i]);
  for (int i = 0; i < q; ++i) row("a", i, 0, t.a[i]);
  for (int i = 0; i < q; ++i)
    for (int nu = 0; nu < 2 * q; ++nu) row("b", i, nu, t.b(i, nu));
  for (int nu = 0; nu < 2 * q; ++nu) row("c0", 0, nu, t.c0[nu]);
  for (int i = 0; i < q; ++i)
    for (int nu = 0; nu < 2 * q; ++nu) row("c", i, nu, t.c(i, nu));
  for (int j = 0; j <= q; ++j) row("ell_hat_at_one", j, 0, t.ell_hat_at_one[j]);
  row("stability_margin", 0, 0, stability_margin(t));
  return out;
}

} // namespace cgq
