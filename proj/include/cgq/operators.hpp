#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "cgq/errors.hpp"
#include "cgq/mesh.hpp"
#include "cgq/quadrature.hpp"

namespace cgq {

using RealSparse = Eigen::SparseMatrix<double>;
using ComplexSparse = Eigen::SparseMatrix<Complex>;

/// Trapping potential V(x, y) >= 0.
struct Potential {
  std::function<double(double, double)> fn;
  std::string description;

  double operator()(double x, double y) const { return fn(x, y); }

  /// (gamma_x x)^2 + (gamma_y y)^2
  static Potential harmonic(double gamma_x, double gamma_y) {
    return {[gamma_x, gamma_y](double x, double y) {
              return gamma_x * gamma_x * x * x + gamma_y * gamma_y * y * y;
            },
            "(" + std::to_string(gamma_x) + " x)^2 + (" + std::to_string(gamma_y) + " y)^2"};
  }

  static Potential zero() {
    return {[](double, double) { return 0.0; }, "0"};
  }
};

/// Physical parameters of  i u_t = -Lap u - Omega L_z u + V u + beta |u|^2 u.
struct GpeProblem {
  double omega = 0.0;
  double beta = 0.0;
  Potential potential = Potential::zero();
  double lambda_margin = 0.1;
};

/// Per-element data shared by every spatial integral.
struct ElementTable {
  std::vector<std::array<int, 3>> dofs; // -1 for boundary vertices
  std::vector<std::array<Point, 3>> corners;
  std::vector<double> area;
  TriangleRule rule = triangle_rule(4);
};

inline ElementTable build_element_table(const Mesh& mesh, const DofMap& dofmap) {
  ElementTable table;
  const std::size_t nt = mesh.triangles.size();
  table.dofs.resize(nt);
  table.corners.resize(nt);
  table.area.resize(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    for (int a = 0; a < 3; ++a) {
      const int v = mesh.triangles[t][a];
      table.dofs[t][a] = dofmap.vertex_to_dof[v];
      table.corners[t][a] = mesh.vertices[v];
    }
    table.area[t] = mesh.signed_area(t);
  }
  return table;
}

inline Point barycentric_to_point(const std::array<Point, 3>& c,
                                  const std::array<double, 3>& lam) {
  return {lam[0] * c[0].x + lam[1] * c[1].x + lam[2] * c[2].x,
          lam[0] * c[0].y + lam[1] * c[1].y + lam[2] * c[2].y};
}

namespace detail {

// Constant gradients of the three P1 shape functions.
inline std::array<Point, 3> p1_gradients(const std::array<Point, 3>& c, double area) {
  const double s = 1.0 / (2.0 * area);
  return {Point{(c[1].y - c[2].y) * s, (c[2].x - c[1].x) * s},
          Point{(c[2].y - c[0].y) * s, (c[0].x - c[2].x) * s},
          Point{(c[0].y - c[1].y) * s, (c[1].x - c[0].x) * s}};
}

template <typename Local>
RealSparse assemble_real(const ElementTable& el, int n, Local&& local) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(el.dofs.size() * 9);
  for (std::size_t t = 0; t < el.dofs.size(); ++t) {
    const auto block = local(t);
    for (int a = 0; a < 3; ++a) {
      const int ra = el.dofs[t][a];
      if (ra < 0) {
        continue;
      }
      for (int b = 0; b < 3; ++b) {
        const int cb = el.dofs[t][b];
        if (cb >= 0) {
          trips.emplace_back(ra, cb, block[a][b]);
        }
      }
    }
  }
  RealSparse mat(n, n);
  mat.setFromTriplets(trips.begin(), trips.end());
  mat.makeCompressed();
  return mat;
}

using Block = std::array<std::array<double, 3>, 3>;

} // namespace detail

/// Consistent P1 mass matrix on the interior dofs.
inline RealSparse assemble_mass(const ElementTable& el, int n_dofs) {
  return detail::assemble_real(el, n_dofs, [&](std::size_t t) {
    detail::Block blk{};
    const double d = el.area[t] / 12.0;
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        blk[a][b] = a == b ? 2.0 * d : d;
      }
    }
    return blk;
  });
}

inline RealSparse assemble_stiffness(const ElementTable& el, int n_dofs) {
  return detail::assemble_real(el, n_dofs, [&](std::size_t t) {
    detail::Block blk{};
    const auto g = detail::p1_gradients(el.corners[t], el.area[t]);
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        blk[a][b] = el.area[t] * (g[a].x * g[b].x + g[a].y * g[b].y);
      }
    }
    return blk;
  });
}

/// Antisymmetric rotation block for Omega = 1, b(x) = (y, -x):
/// S(j,k) = 1/2 int (b . grad phi_j) phi_k - (b . grad phi_k) phi_j.
inline RealSparse assemble_rotation_unit(const ElementTable& el, int n_dofs) {
  const TriangleRule rule = triangle_rule(2);
  return detail::assemble_real(el, n_dofs, [&](std::size_t t) {
    detail::Block blk{};
    const auto g = detail::p1_gradients(el.corners[t], el.area[t]);
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const auto& lam = rule.points[k];
      const Point p = barycentric_to_point(el.corners[t], lam);
      const double bx = p.y;
      const double by = -p.x;
      const double w = el.area[t] * rule.weights[k];
      for (int a = 0; a < 3; ++a) {
        const double bg_a = bx * g[a].x + by * g[a].y;
        for (int b = 0; b < 3; ++b) {
          const double bg_b = bx * g[b].x + by * g[b].y;
          blk[a][b] += 0.5 * w * (bg_a * lam[b] - bg_b * lam[a]);
        }
      }
    }
    return blk;
  });
}

inline RealSparse assemble_potential(const ElementTable& el, int n_dofs,
                                     const Potential& V) {
  return detail::assemble_real(el, n_dofs, [&](std::size_t t) {
    detail::Block blk{};
    for (std::size_t k = 0; k < el.rule.size(); ++k) {
      const auto& lam = el.rule.points[k];
      const Point p = barycentric_to_point(el.corners[t], lam);
      const double wv = el.area[t] * el.rule.weights[k] * V(p.x, p.y);
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
          blk[a][b] += wv * lam[a] * lam[b];
        }
      }
    }
    return blk;
  });
}

/// Discrete operators on the interior dofs: K = stiffness + i Omega S + V-mass,
/// with K(j,k) = (phi_j, phi_k)_H.
struct DiscreteOperators {
  Mesh mesh;
  DofMap dofs;
  ElementTable elements;
  double omega = 0.0;

  RealSparse mass;
  RealSparse stiffness;
  RealSparse rotation_unit; // S at Omega = 1
  RealSparse potential;
  ComplexSparse K;

  int size() const { return dofs.n_dofs; }

  RealSparse rotation() const { return omega * rotation_unit; }
};

inline void check_potential_nonnegative(const Mesh& mesh, const Potential& V) {
  for (const Point& p : mesh.vertices) {
    const double v = V(p.x, p.y);
    if (!std::isfinite(v) || v < 0.0) {
      throw ValidationError("potential is negative or non-finite at (" +
                            std::to_string(p.x) + ", " + std::to_string(p.y) +
                            "); V >= 0 is required");
    }
  }
}

inline DiscreteOperators assemble_operators(const Mesh& mesh, const GpeProblem& problem) {
  check_potential_nonnegative(mesh, problem.potential);
  if (!(problem.beta >= 0.0)) {
    throw ValidationError("beta must be >= 0 (repulsive interaction)");
  }
  DiscreteOperators ops;
  ops.mesh = mesh;
  ops.dofs = build_dofmap(mesh);
  ops.elements = build_element_table(mesh, ops.dofs);
  ops.omega = problem.omega;
  const int n = ops.dofs.n_dofs;
  ops.mass = assemble_mass(ops.elements, n);
  ops.stiffness = assemble_stiffness(ops.elements, n);
  ops.rotation_unit = assemble_rotation_unit(ops.elements, n);
  ops.potential = assemble_potential(ops.elements, n, problem.potential);

  const Complex i_omega(0.0, problem.omega);
  ops.K = (ops.stiffness + ops.potential).cast<Complex>() +
          i_omega * ops.rotation_unit.cast<Complex>();
  ops.K.makeCompressed();
  return ops;
}

/// Convenience entry matching the (mesh, dofmap, problem) contract; returns K.
inline ComplexSparse assemble_hamiltonian(const Mesh& mesh, const GpeProblem& problem) {
  return assemble_operators(mesh, problem).K;
}

/// N(u)[i] = int |u_h|^2 u_h phi_i, exact for P1 u_h with the degree-4 rule.
inline Eigen::VectorXcd nonlinear_residual(const ComplexField& u, const ElementTable& el,
                                           int n_dofs) {
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n_dofs);
  const auto& rule = el.rule;
  for (std::size_t t = 0; t < el.dofs.size(); ++t) {
    const auto& d = el.dofs[t];
    const Complex u0 = d[0] >= 0 ? u[d[0]] : Complex{};
    const Complex u1 = d[1] >= 0 ? u[d[1]] : Complex{};
    const Complex u2 = d[2] >= 0 ? u[d[2]] : Complex{};
    Complex acc[3] = {};
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const auto& lam = rule.points[k];
      const Complex val = lam[0] * u0 + lam[1] * u1 + lam[2] * u2;
      const Complex g = std::norm(val) * val * rule.weights[k];
      acc[0] += g * lam[0];
      acc[1] += g * lam[1];
      acc[2] += g * lam[2];
    }
    for (int a = 0; a < 3; ++a) {
      if (d[a] >= 0) {
        out[d[a]] += el.area[t] * acc[a];
      }
    }
  }
  return out;
}

inline Eigen::VectorXcd nonlinear_residual(const ComplexField& u, const DiscreteOperators& ops) {
  return nonlinear_residual(u, ops.elements, ops.size());
}

/// int |u_h|^4, exact for P1 u_h.
inline double quartic_integral(const ComplexField& u, const ElementTable& el) {
  double total = 0.0;
  const auto& rule = el.rule;
  for (std::size_t t = 0; t < el.dofs.size(); ++t) {
    const auto& d = el.dofs[t];
    const Complex u0 = d[0] >= 0 ? u[d[0]] : Complex{};
    const Complex u1 = d[1] >= 0 ? u[d[1]] : Complex{};
    const Complex u2 = d[2] >= 0 ? u[d[2]] : Complex{};
    double acc = 0.0;
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const auto& lam = rule.points[k];
      const double rho = std::norm(lam[0] * u0 + lam[1] * u1 + lam[2] * u2);
      acc += rule.weights[k] * rho * rho;
    }
    total += el.area[t] * acc;
  }
  return total;
}

struct TrapCheck {
  bool pass = true;
  double worst_margin = std::numeric_limits<double>::infinity();
  Point worst_at;
};

/// Checks V - (1+lambda)/4 Omega^2 (x^2+y^2) >= 0 at every degree-4 quadrature
/// point of every element.
inline TrapCheck validate_trap(const GpeProblem& problem, const Mesh& mesh) {
  if (!(problem.lambda_margin > 0.0)) {
    throw ConfigError("validate_trap: lambda_margin must be positive");
  }
  const TriangleRule rule = triangle_rule(4);
  const double coef = 0.25 * (1.0 + problem.lambda_margin) * problem.omega * problem.omega;
  TrapCheck check;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    std::array<Point, 3> c;
    for (int a = 0; a < 3; ++a) {
      c[a] = mesh.vertices[mesh.triangles[t][a]];
    }
    for (const auto& lam : rule.points) {
      const Point p = barycentric_to_point(c, lam);
      const double v = problem.potential(p.x, p.y);
      const double centrifugal = coef * (p.x * p.x + p.y * p.y);
      const double margin = v - centrifugal;
      if (margin < check.worst_margin) {
        check.worst_margin = margin;
        check.worst_at = p;
      }
      // Round-off slack relative to the size of the compared terms.
      if (margin < -1e-12 * std::max({1.0, std::abs(v), centrifugal})) {
        check.pass = false;
      }
    }
  }
  return check;
}

} // namespace cgq
