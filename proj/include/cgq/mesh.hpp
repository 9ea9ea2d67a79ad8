#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cgq/errors.hpp"

namespace cgq {

using Complex = std::complex<double>;

/// Nodal coefficients of a P1 function over the interior degrees of freedom.
using ComplexField = Eigen::VectorXcd;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Uniform triangulation of (-R,R)^2 with N_h subdivisions per side. Vertex
/// (i,j) has id j*(N_h+1)+i and sits at (-R + i h, -R + j h). Every square is
/// split along its lower-left to upper-right diagonal.
struct Mesh {
  double R = 0.0;
  int n_sub = 0;
  double h = 0.0;
  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> triangles; // counterclockwise

  int vertex_id(int i, int j) const { return j * (n_sub + 1) + i; }
  int vertices_per_side() const { return n_sub + 1; }

  double signed_area(std::size_t t) const {
    const auto& tri = triangles[t];
    const Point& a = vertices[tri[0]];
    const Point& b = vertices[tri[1]];
    const Point& c = vertices[tri[2]];
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
  }
};

inline Mesh build_mesh(double R, int n_sub) {
  if (!(R > 0.0) || !std::isfinite(R)) {
    throw ConfigError("build_mesh: R must be positive, got " + std::to_string(R));
  }
  if (n_sub < 2) {
    throw ConfigError("build_mesh: N_h must be >= 2, got " + std::to_string(n_sub));
  }
  Mesh mesh;
  mesh.R = R;
  mesh.n_sub = n_sub;
  mesh.h = 2.0 * R / n_sub;
  const int nv = n_sub + 1;
  mesh.vertices.reserve(static_cast<std::size_t>(nv) * nv);
  for (int j = 0; j < nv; ++j) {
    for (int i = 0; i < nv; ++i) {
      mesh.vertices.push_back({-R + i * mesh.h, -R + j * mesh.h});
    }
  }
  mesh.triangles.reserve(2 * static_cast<std::size_t>(n_sub) * n_sub);
  for (int j = 0; j < n_sub; ++j) {
    for (int i = 0; i < n_sub; ++i) {
      const int v00 = mesh.vertex_id(i, j);
      const int v10 = mesh.vertex_id(i + 1, j);
      const int v01 = mesh.vertex_id(i, j + 1);
      const int v11 = mesh.vertex_id(i + 1, j + 1);
      mesh.triangles.push_back({v00, v10, v11});
      mesh.triangles.push_back({v00, v11, v01});
    }
  }
  return mesh;
}

/// Interior-vertex numbering realizing homogeneous Dirichlet conditions.
struct DofMap {
  std::vector<int> vertex_to_dof; // -1 on the boundary
  std::vector<int> dof_to_vertex;
  int n_dofs = 0;

  bool is_boundary(int vertex) const { return vertex_to_dof[vertex] < 0; }
};

inline DofMap build_dofmap(const Mesh& mesh) {
  DofMap map;
  const int nv = mesh.vertices_per_side();
  map.vertex_to_dof.assign(mesh.vertices.size(), -1);
  for (int j = 1; j < nv - 1; ++j) {
    for (int i = 1; i < nv - 1; ++i) {
      const int v = mesh.vertex_id(i, j);
      map.vertex_to_dof[v] = map.n_dofs++;
      map.dof_to_vertex.push_back(v);
    }
  }
  return map;
}

/// Samples fn at the interior vertices.
inline ComplexField interpolate(const std::function<Complex(double, double)>& fn,
                                const Mesh& mesh, const DofMap& dofs) {
  ComplexField u(dofs.n_dofs);
  for (int d = 0; d < dofs.n_dofs; ++d) {
    const Point& p = mesh.vertices[dofs.dof_to_vertex[d]];
    const Complex z = fn(p.x, p.y);
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
      throw DataError("interpolate: non-finite sample at (" + std::to_string(p.x) +
                      ", " + std::to_string(p.y) + ")");
    }
    u[d] = z;
  }
  return u;
}

/// Nodal values on all (N_h+1)^2 vertices, zero on the boundary.
inline Eigen::VectorXcd expand_to_vertices(const ComplexField& u, const Mesh& mesh,
                                           const DofMap& dofs) {
  if (u.size() != dofs.n_dofs) {
    throw DataError("expand_to_vertices: field length does not match dof map");
  }
  Eigen::VectorXcd full = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(mesh.vertices.size()));
  for (int d = 0; d < dofs.n_dofs; ++d) {
    full[dofs.dof_to_vertex[d]] = u[d];
  }
  return full;
}

} // namespace cgq
