#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "common.hpp"

namespace flowstab {

// Rectangle (0,Lx) x (-Ly,0), uniform nx-by-ny quadrilateral mesh.
// The elastic segment Omega is the top edge x2 = 0; the three rigid
// walls are tagged as wall nodes.  Corner nodes belong to the walls.

struct GeometryConfig {
  double Lx = 1.0;
  double Ly = 1.0;
  int nx = 64;
  int ny = 64;
};

enum class BoundaryTag { interior, omega, wall };

// Tensor Gauss rule on the reference interval [0,1]; weights sum to 1.
// Three points integrate degree 5 exactly, four points degree 7.
struct QuadRule {
  std::vector<double> xi;
  std::vector<double> w;
};

inline QuadRule gauss_rule(int n) {
  ensure(n == 3 || n == 4, "gauss_rule: only 3 or 4 point rules provided");
  QuadRule q;
  if (n == 3) {
    const double r = std::sqrt(3.0 / 5.0);
    q.xi = {0.5 * (1.0 - r), 0.5, 0.5 * (1.0 + r)};
    q.w = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  } else {
    const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
    const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
    const double wa = (18.0 + std::sqrt(30.0)) / 72.0;
    const double wb = (18.0 - std::sqrt(30.0)) / 72.0;
    q.xi = {0.5 * (1.0 - b), 0.5 * (1.0 - a), 0.5 * (1.0 + a), 0.5 * (1.0 + b)};
    q.w = {wb, wa, wa, wb};
  }
  return q;
}

struct Grid {
  GeometryConfig geo;
  double hx = 0.0, hy = 0.0;
  int n_nodes = 0, n_cells = 0;
  std::vector<int> omega_nodes;    // all nx+1 nodes on the top edge
  std::vector<int> boundary_loop;  // counterclockwise from (0,-Ly)
  QuadRule quad;                   // volume rule, applied per direction

  int nid(int i, int j) const { return j * (geo.nx + 1) + i; }
  int cid(int ci, int cj) const { return cj * geo.nx + ci; }
  int node_i(int n) const { return n % (geo.nx + 1); }
  int node_j(int n) const { return n / (geo.nx + 1); }
  double node_x(int n) const { return hx * node_i(n); }
  double node_y(int n) const { return -geo.Ly + hy * node_j(n); }

  // Corners of cell c, counterclockwise from its lower-left node.
  std::array<int, 4> cell_nodes(int c) const {
    const int ci = c % geo.nx, cj = c / geo.nx;
    return {nid(ci, cj), nid(ci + 1, cj), nid(ci + 1, cj + 1), nid(ci, cj + 1)};
  }

  bool on_boundary(int n) const {
    const int i = node_i(n), j = node_j(n);
    return i == 0 || i == geo.nx || j == 0 || j == geo.ny;
  }

  BoundaryTag tag(int n) const {
    if (!on_boundary(n)) return BoundaryTag::interior;
    const int i = node_i(n), j = node_j(n);
    if (j == geo.ny && i > 0 && i < geo.nx) return BoundaryTag::omega;
    return BoundaryTag::wall;
  }

  // Outward normal; at corners the vertical wall takes precedence so the
  // tangent field stays single valued along the boundary loop.
  Eigen::Vector2d normal(int n) const {
    ensure(on_boundary(n), "normal: interior node");
    const int i = node_i(n), j = node_j(n);
    if (i == 0) return {-1.0, 0.0};
    if (i == geo.nx) return {1.0, 0.0};
    if (j == 0) return {0.0, -1.0};
    return {0.0, 1.0};
  }

  // Oriented along the counterclockwise boundary loop.
  Eigen::Vector2d tangent(int n) const {
    const Eigen::Vector2d nv = normal(n);
    return {-nv.y(), nv.x()};
  }
};

inline Grid build_grid(const GeometryConfig& geo) {
  ensure(finite(geo.Lx) && finite(geo.Ly) && geo.Lx > 0.0 && geo.Ly > 0.0,
         "build_grid: side lengths must be positive and finite");
  ensure(geo.nx >= 4 && geo.ny >= 4, "build_grid: need at least 4 cells per direction");
  Grid g;
  g.geo = geo;
  g.hx = geo.Lx / geo.nx;
  g.hy = geo.Ly / geo.ny;
  g.n_nodes = (geo.nx + 1) * (geo.ny + 1);
  g.n_cells = geo.nx * geo.ny;
  g.quad = gauss_rule(3);

  g.omega_nodes.reserve(geo.nx + 1);
  for (int i = 0; i <= geo.nx; ++i) g.omega_nodes.push_back(g.nid(i, geo.ny));

  g.boundary_loop.reserve(2 * (geo.nx + geo.ny));
  for (int i = 0; i < geo.nx; ++i) g.boundary_loop.push_back(g.nid(i, 0));
  for (int j = 0; j < geo.ny; ++j) g.boundary_loop.push_back(g.nid(geo.nx, j));
  for (int i = geo.nx; i > 0; --i) g.boundary_loop.push_back(g.nid(i, geo.ny));
  for (int j = geo.ny; j > 0; --j) g.boundary_loop.push_back(g.nid(0, j));
  return g;
}

// Unit tangents along the boundary loop, one per node, in loop order.
inline std::vector<Eigen::Vector2d> boundary_tangential_basis(const Grid& g) {
  std::vector<Eigen::Vector2d> t;
  t.reserve(g.boundary_loop.size());
  for (int n : g.boundary_loop) t.push_back(g.tangent(n));
  return t;
}

// Bilinear shape values and reference gradients at (xi,eta) in [0,1]^2,
// corner order matching Grid::cell_nodes.
struct Q1Basis {
  std::array<double, 4> val;
  std::array<double, 4> dxi;
  std::array<double, 4> deta;
};

inline Q1Basis q1_basis(double xi, double eta) {
  Q1Basis b;
  b.val = {(1 - xi) * (1 - eta), xi * (1 - eta), xi * eta, (1 - xi) * eta};
  b.dxi = {-(1 - eta), (1 - eta), eta, -eta};
  b.deta = {-(1 - xi), -xi, xi, (1 - xi)};
  return b;
}

}  // namespace flowstab
