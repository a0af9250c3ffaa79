#include <catch2/catch_amalgamated.hpp>

#include "flowstab/grid.hpp"

using namespace flowstab;

TEST_CASE("node, cell and boundary counts on the unit square", "[grid]") {
  Grid g = build_grid({1.0, 1.0, 4, 4});
  CHECK(g.n_nodes == 25);
  CHECK(g.n_cells == 16);
  CHECK(g.omega_nodes.size() == 5);
  CHECK(g.boundary_loop.size() == 16);
  CHECK(g.hx == Catch::Approx(0.25));
  CHECK(g.hy == Catch::Approx(0.25));
}

TEST_CASE("boundary loop length on an anisotropic mesh", "[grid]") {
  Grid g = build_grid({2.0, 1.0, 8, 4});
  CHECK(g.boundary_loop.size() == 24);
  CHECK(g.n_nodes == 45);
}

TEST_CASE("degenerate geometry is rejected", "[grid]") {
  CHECK_THROWS(build_grid({1.0, 1.0, 3, 4}));
  CHECK_THROWS(build_grid({1.0, 1.0, 4, 3}));
  CHECK_THROWS(build_grid({0.0, 1.0, 4, 4}));
  CHECK_THROWS(build_grid({1.0, -1.0, 4, 4}));
  CHECK_THROWS(build_grid({std::nan(""), 1.0, 4, 4}));
}

TEST_CASE("corner nodes are wall nodes, top interior nodes are elastic", "[grid]") {
  Grid g = build_grid({1.0, 1.0, 6, 4});
  int n_omega = 0, n_wall = 0;
  for (int n = 0; n < g.n_nodes; ++n) {
    switch (g.tag(n)) {
      case BoundaryTag::omega: ++n_omega; break;
      case BoundaryTag::wall: ++n_wall; break;
      default: break;
    }
  }
  CHECK(n_omega == 5);                       // top edge minus both corners
  CHECK(n_omega + n_wall == 2 * (6 + 4));    // whole perimeter
  CHECK(g.tag(g.nid(0, 4)) == BoundaryTag::wall);
  CHECK(g.tag(g.nid(6, 4)) == BoundaryTag::wall);
  CHECK(g.tag(g.nid(3, 4)) == BoundaryTag::omega);
  CHECK(g.omega_nodes.size() == 7);          // closure of the segment
}

TEST_CASE("normals point outward and tangents follow the loop", "[grid]") {
  Grid g = build_grid({1.0, 1.0, 4, 4});
  const Eigen::Vector2d c(0.5, -0.5);
  for (int n : g.boundary_loop) {
    const Eigen::Vector2d x(g.node_x(n), g.node_y(n));
    const Eigen::Vector2d nv = g.normal(n);
    CHECK((x - c).dot(nv) > 0.0);
    CHECK(nv.norm() == Catch::Approx(1.0));
  }
  // the loop runs rightward along the bottom, leftward along the top,
  // downward along the left wall
  CHECK(g.tangent(g.nid(2, 4)).isApprox(Eigen::Vector2d(-1.0, 0.0)));
  CHECK(g.tangent(g.nid(0, 2)).isApprox(Eigen::Vector2d(0.0, -1.0)));
  CHECK(g.tangent(g.nid(2, 0)).isApprox(Eigen::Vector2d(1.0, 0.0)));
  const auto taus = boundary_tangential_basis(g);
  REQUIRE(taus.size() == g.boundary_loop.size());
  // corners inherit the vertical wall's tangent
  CHECK(taus[4].isApprox(Eigen::Vector2d(0.0, 1.0)));   // node (nx,0)
}

TEST_CASE("refined grids nest the coarse nodes", "[grid]") {
  Grid gc = build_grid({1.0, 1.0, 8, 8});
  Grid gf = build_grid({1.0, 1.0, 16, 16});
  for (int j = 0; j <= 8; ++j)
    for (int i = 0; i <= 8; ++i) {
      const int nc = gc.nid(i, j), nf = gf.nid(2 * i, 2 * j);
      CHECK(gc.node_x(nc) == Catch::Approx(gf.node_x(nf)).margin(1e-15));
      CHECK(gc.node_y(nc) == Catch::Approx(gf.node_y(nf)).margin(1e-15));
    }
}

TEST_CASE("gauss rules hit their stated polynomial degrees", "[grid]") {
  for (int npts : {3, 4}) {
    QuadRule q = gauss_rule(npts);
    const int exact_deg = 2 * npts - 1;
    for (int k = 0; k <= exact_deg; ++k) {
      double s = 0.0;
      for (size_t i = 0; i < q.xi.size(); ++i) s += q.w[i] * std::pow(q.xi[i], k);
      CHECK(s == Catch::Approx(1.0 / (k + 1)).epsilon(1e-14));
    }
  }
}

TEST_CASE("tensor quadrature integrates cell monomials exactly", "[grid]") {
  Grid g = build_grid({1.3, 0.9, 4, 4});
  QuadRule q = g.quad;
  const int c = g.cid(1, 2);
  const auto nodes = g.cell_nodes(c);
  const double x0 = g.node_x(nodes[0]), y0 = g.node_y(nodes[0]);
  for (int a = 0; a <= 5; ++a)
    for (int b = 0; b <= 5; ++b) {
      double s = 0.0;
      for (size_t i = 0; i < q.xi.size(); ++i)
        for (size_t j = 0; j < q.xi.size(); ++j) {
          const double x = x0 + g.hx * q.xi[i], y = y0 + g.hy * q.xi[j];
          s += q.w[i] * q.w[j] * std::pow(x - x0, a) * std::pow(y - y0, b);
        }
      s *= g.hx * g.hy;
      const double ref = std::pow(g.hx, a + 1) / (a + 1) * std::pow(g.hy, b + 1) / (b + 1);
      CHECK(s == Catch::Approx(ref).epsilon(1e-13));
    }
}

TEST_CASE("bilinear basis interpolates corners and sums to one", "[grid]") {
  const double xi = 0.3, eta = 0.7;
  Q1Basis b = q1_basis(xi, eta);
  CHECK(b.val[0] + b.val[1] + b.val[2] + b.val[3] == Catch::Approx(1.0));
  CHECK(b.dxi[0] + b.dxi[1] + b.dxi[2] + b.dxi[3] == Catch::Approx(0.0).margin(1e-15));
  CHECK(b.deta[0] + b.deta[1] + b.deta[2] + b.deta[3] == Catch::Approx(0.0).margin(1e-15));
  const double corners[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  for (int a = 0; a < 4; ++a) {
    Q1Basis ba = q1_basis(corners[a][0], corners[a][1]);
    for (int m = 0; m < 4; ++m)
      CHECK(ba.val[m] == Catch::Approx(m == a ? 1.0 : 0.0).margin(1e-15));
  }
}
