#pragma once

#include <memory>

#include <Eigen/SparseCholesky>

#include "fields.hpp"

namespace flowstab {

struct PhysicalParams {
  double eta = 1.0;     // drag, must be positive for the dissipation machinery
  double lambda = 0.5;  // compressibility Lame coefficient
  double nu = 1.0;      // shear Lame coefficient
};

inline void validate_params(const PhysicalParams& p) {
  ensure(finite(p.eta) && finite(p.lambda) && finite(p.nu),
         "params: coefficients must be finite");
  ensure(p.eta > 0.0, "params: drag eta must be positive");
  ensure(p.nu > 0.0, "params: shear nu must be positive");
  ensure(p.lambda >= 0.0, "params: lambda must be nonnegative");
}

// Cubic Hermite shapes on a beam cell of width h, DOF order value/slope at
// the left node then the right node.
struct BeamBasis {
  std::array<double, 4> val, d2;
};

inline BeamBasis beam_basis(double xi, double h) {
  BeamBasis b;
  b.val = {1.0 - 3.0 * xi * xi + 2.0 * xi * xi * xi, h * xi * (1.0 - xi) * (1.0 - xi),
           3.0 * xi * xi - 2.0 * xi * xi * xi, h * xi * xi * (xi - 1.0)};
  b.d2 = {(12.0 * xi - 6.0) / (h * h), (6.0 * xi - 4.0) / h, (6.0 - 12.0 * xi) / (h * h),
          (6.0 * xi - 2.0) / h};
  return b;
}

// Hermite DOF on the full node set -> clamped index, or -1 at the ends.
inline int beam_reduced_dof(const Grid& g, int node_i, int comp) {
  if (node_i <= 0 || node_i >= g.geo.nx) return -1;
  return 2 * (node_i - 1) + comp;
}

// Every bilinear form the laboratory needs, assembled over the full node
// sets (no boundary elimination here).  Velocity DOFs are interleaved
// (2*node+component); pressure lives on the coarse mesh.  The 3-point tensor
// Gauss rule is exact for every integrand below, including the convection
// terms against the polynomial ambient field.
struct FlowForms {
  SpMat Mu, Su, Lu, Nu;  // velocity mass, stress stiffness, gradient stiffness, convection
  SpMat Mp, Np;          // coarse pressure mass and convection
  SpMat D;               // (div u, chi), coarse rows by velocity columns
  SpMat Mcf;             // (coarse basis, fine scalar basis), fine rows
  SpMat Kb, Mb;          // clamped Hermite bending stiffness and mass
  SpMat Bw;              // (Hermite, fine trace hat) pairing, fine scalar rows
  VecR f1;               // Hermite load of the constant 1
  VecR p_weights;        // integrals of the coarse pressure basis
  double meas = 0.0;
};

inline FlowForms assemble_flow_forms(const Grid& g, const PhysicalParams& par,
                                     const AmbientField& amb) {
  const DiscreteSizes sz = state_sizes(g);
  const int nx = g.geo.nx, ny = g.geo.ny;
  const double hx = g.hx, hy = g.hy;
  const QuadRule q = g.quad;
  const int nq = static_cast<int>(q.xi.size());

  auto cnid = [&](int I, int J) { return J * (sz.ncx + 1) + I; };

  std::vector<Trip> tMu, tSu, tLu, tNu, tMp, tNp, tD, tMcf, tKb, tMb, tBw;
  tMu.reserve(64 * g.n_cells);
  tSu.reserve(64 * g.n_cells);
  tLu.reserve(64 * g.n_cells);
  tNu.reserve(64 * g.n_cells);
  tD.reserve(32 * g.n_cells);
  tMcf.reserve(16 * g.n_cells);

  FlowForms f;
  f.meas = 0.0;

  // fine-mesh volume forms
  for (int cj = 0; cj < ny; ++cj)
    for (int ci = 0; ci < nx; ++ci) {
      const auto nodes = g.cell_nodes(g.cid(ci, cj));
      const double x0 = g.node_x(nodes[0]), y0 = g.node_y(nodes[0]);
      const int CI = ci / 2, CJ = cj / 2;
      const std::array<int, 4> cg = {cnid(CI, CJ), cnid(CI + 1, CJ), cnid(CI + 1, CJ + 1),
                                     cnid(CI, CJ + 1)};

      double Me[8][8] = {}, Se[8][8] = {}, Le[8][8] = {}, Ne[8][8] = {};
      double De[4][8] = {}, Ce[4][4] = {};

      for (int gi = 0; gi < nq; ++gi)
        for (int gj = 0; gj < nq; ++gj) {
          const double xi = q.xi[gi], eta = q.xi[gj];
          const double wq = q.w[gi] * q.w[gj] * hx * hy;
          const Q1Basis b = q1_basis(xi, eta);
          double dN[4][2];
          for (int m = 0; m < 4; ++m) {
            dN[m][0] = b.dxi[m] / hx;
            dN[m][1] = b.deta[m] / hy;
          }
          // parent coarse cell, local coordinates by half-offset
          const Q1Basis cb = q1_basis(0.5 * (ci % 2 + xi), 0.5 * (cj % 2 + eta));
          const double x = x0 + hx * xi, y = y0 + hy * eta;
          const Eigen::Vector2d U = amb.value(x, y);

          for (int mb = 0; mb < 4; ++mb) {
            const double udN[2] = {U.x() * dN[mb][0] + U.y() * dN[mb][1], 0};
            for (int ma = 0; ma < 4; ++ma) {
              const double mass = wq * b.val[ma] * b.val[mb];
              const double grad = wq * (dN[ma][0] * dN[mb][0] + dN[ma][1] * dN[mb][1]);
              const double conv = wq * b.val[ma] * udN[0];
              for (int ca = 0; ca < 2; ++ca)
                for (int cc = 0; cc < 2; ++cc) {
                  const int a = 2 * ma + ca, bb = 2 * mb + cc;
                  double s = par.nu * dN[ma][cc] * dN[mb][ca] +
                             par.lambda * dN[ma][ca] * dN[mb][cc];
                  if (ca == cc) {
                    s += par.nu * (grad / wq);
                    Me[a][bb] += mass;
                    Le[a][bb] += grad;
                    Ne[a][bb] += conv;
                  }
                  Se[a][bb] += wq * s;
                }
              // fine-coarse scalar mass, rows fine
              Ce[ma][mb] += wq * b.val[ma] * cb.val[mb];
            }
            for (int I = 0; I < 4; ++I)
              for (int cc = 0; cc < 2; ++cc)
                De[I][2 * mb + cc] += wq * cb.val[I] * dN[mb][cc];
          }
        }

      int gd[8];
      for (int m = 0; m < 4; ++m) {
        gd[2 * m] = 2 * nodes[m];
        gd[2 * m + 1] = 2 * nodes[m] + 1;
      }
      for (int a = 0; a < 8; ++a)
        for (int b2 = 0; b2 < 8; ++b2) {
          if (Me[a][b2] != 0.0) tMu.emplace_back(gd[a], gd[b2], Me[a][b2]);
          if (Se[a][b2] != 0.0) tSu.emplace_back(gd[a], gd[b2], Se[a][b2]);
          if (Le[a][b2] != 0.0) tLu.emplace_back(gd[a], gd[b2], Le[a][b2]);
          if (Ne[a][b2] != 0.0) tNu.emplace_back(gd[a], gd[b2], Ne[a][b2]);
        }
      for (int I = 0; I < 4; ++I)
        for (int b2 = 0; b2 < 8; ++b2)
          if (De[I][b2] != 0.0) tD.emplace_back(cg[I], gd[b2], De[I][b2]);
      for (int ma = 0; ma < 4; ++ma)
        for (int I = 0; I < 4; ++I)
          if (Ce[ma][I] != 0.0) tMcf.emplace_back(nodes[ma], cg[I], Ce[ma][I]);
    }

  // coarse-mesh pressure forms
  for (int CJ = 0; CJ < sz.ncy; ++CJ)
    for (int CI = 0; CI < sz.ncx; ++CI) {
      const double X0 = 2.0 * hx * CI, Y0 = -g.geo.Ly + 2.0 * hy * CJ;
      const std::array<int, 4> cg = {cnid(CI, CJ), cnid(CI + 1, CJ), cnid(CI + 1, CJ + 1),
                                     cnid(CI, CJ + 1)};
      double Mpe[4][4] = {}, Npe[4][4] = {};
      for (int gi = 0; gi < nq; ++gi)
        for (int gj = 0; gj < nq; ++gj) {
          const double wq = q.w[gi] * q.w[gj] * 4.0 * hx * hy;
          const Q1Basis cb = q1_basis(q.xi[gi], q.xi[gj]);
          double cdN[4][2];
          for (int m = 0; m < 4; ++m) {
            cdN[m][0] = cb.dxi[m] / (2.0 * hx);
            cdN[m][1] = cb.deta[m] / (2.0 * hy);
          }
          const double x = X0 + 2.0 * hx * q.xi[gi], y = Y0 + 2.0 * hy * q.xi[gj];
          const Eigen::Vector2d U = amb.value(x, y);
          f.meas += wq;
          for (int I = 0; I < 4; ++I)
            for (int J = 0; J < 4; ++J) {
              Mpe[I][J] += wq * cb.val[I] * cb.val[J];
              Npe[I][J] += wq * cb.val[I] * (U.x() * cdN[J][0] + U.y() * cdN[J][1]);
            }
        }
      for (int I = 0; I < 4; ++I)
        for (int J = 0; J < 4; ++J) {
          tMp.emplace_back(cg[I], cg[J], Mpe[I][J]);
          if (Npe[I][J] != 0.0) tNp.emplace_back(cg[I], cg[J], Npe[I][J]);
        }
    }

  // beam forms along the top edge
  const QuadRule qb = gauss_rule(4);
  f.f1 = VecR::Zero(sz.n_w);
  for (int i = 0; i < nx; ++i) {
    double Kbe[4][4] = {}, Mbe[4][4] = {}, Bwe[2][4] = {}, f1e[4] = {};
    for (size_t gq = 0; gq < qb.xi.size(); ++gq) {
      const double xi = qb.xi[gq], wq = qb.w[gq] * hx;
      const BeamBasis bb = beam_basis(xi, hx);
      const double hat[2] = {1.0 - xi, xi};
      for (int a = 0; a < 4; ++a) {
        f1e[a] += wq * bb.val[a];
        for (int b2 = 0; b2 < 4; ++b2) {
          Kbe[a][b2] += wq * bb.d2[a] * bb.d2[b2];
          Mbe[a][b2] += wq * bb.val[a] * bb.val[b2];
        }
        for (int t = 0; t < 2; ++t) Bwe[t][a] += wq * hat[t] * bb.val[a];
      }
    }
    const int ln[2] = {i, i + 1};
    int rd[4];
    for (int t = 0; t < 2; ++t)
      for (int c = 0; c < 2; ++c) rd[2 * t + c] = beam_reduced_dof(g, ln[t], c);
    for (int a = 0; a < 4; ++a) {
      if (rd[a] < 0) continue;
      f.f1[rd[a]] += f1e[a];
      for (int b2 = 0; b2 < 4; ++b2) {
        if (rd[b2] < 0) continue;
        tKb.emplace_back(rd[a], rd[b2], Kbe[a][b2]);
        tMb.emplace_back(rd[a], rd[b2], Mbe[a][b2]);
      }
      for (int t = 0; t < 2; ++t)
        tBw.emplace_back(g.nid(ln[t], ny), rd[a], Bwe[t][a]);
    }
  }

  auto build = [](int r, int c, std::vector<Trip>& t) {
    SpMat m(r, c);
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return m;
  };
  f.Mu = build(sz.n_u, sz.n_u, tMu);
  f.Su = build(sz.n_u, sz.n_u, tSu);
  f.Lu = build(sz.n_u, sz.n_u, tLu);
  f.Nu = build(sz.n_u, sz.n_u, tNu);
  f.Mp = build(sz.n_p, sz.n_p, tMp);
  f.Np = build(sz.n_p, sz.n_p, tNp);
  f.D = build(sz.n_p, sz.n_u, tD);
  f.Mcf = build(g.n_nodes, sz.n_p, tMcf);
  f.Kb = build(sz.n_w, sz.n_w, tKb);
  f.Mb = build(sz.n_w, sz.n_w, tMb);
  f.Bw = build(g.n_nodes, sz.n_w, tBw);
  f.p_weights = f.Mp * VecR::Ones(sz.n_p);
  return f;
}

// Reduced monolithic system G dx/dt = K x.  Unknown order: pressure, free
// velocity DOFs, beam displacement, beam velocity.  The normal velocity
// trace on the elastic segment is not a separate unknown: those columns land
// in the beam-velocity value DOFs, which couples the flow and the beam and
// makes the energy identity exact.
struct OperatorPair {
  Grid grid;
  PhysicalParams params;
  AmbientField ambient;
  DiscreteSizes sizes;
  FlowForms forms;
  GramMatrix G;
  SpMat Cp, Cu;             // skew halves of the convection forms
  std::vector<int> u_map;   // full velocity DOF -> reduced column, -1 essential
  std::vector<int> free_dofs;
  int off_p = 0, off_u = 0, off_w1 = 0, off_w2 = 0, n = 0;
  SpMat Gr, Kr;
  std::shared_ptr<Eigen::SimplicialLDLT<SpMat>> G_solver;

  VecC gather(const StateVector& v) const {
    check_sizes(v, G);
    VecC x(n);
    x.segment(off_p, sizes.n_p) = v.p;
    for (size_t k = 0; k < free_dofs.size(); ++k) x[off_u + k] = v.u[free_dofs[k]];
    x.segment(off_w1, sizes.n_w) = v.w1;
    x.segment(off_w2, sizes.n_w) = v.w2;
    return x;
  }

  StateVector scatter(const VecC& x) const {
    ensure(x.size() == n, "scatter: size mismatch");
    StateVector v = zero_state(grid);
    v.p = x.segment(off_p, sizes.n_p);
    v.w1 = x.segment(off_w1, sizes.n_w);
    v.w2 = x.segment(off_w2, sizes.n_w);
    for (size_t k = 0; k < free_dofs.size(); ++k) v.u[free_dofs[k]] = x[off_u + k];
    for (int i = 1; i < grid.geo.nx; ++i)
      v.u[2 * grid.nid(i, grid.geo.ny) + 1] = x[off_w2 + beam_value_dof(i)];
    return v;
  }
};

inline OperatorPair assemble(const Grid& g, const PhysicalParams& par,
                             const AmbientField& amb) {
  validate_params(par);
  OperatorPair pair;
  pair.grid = g;
  pair.params = par;
  pair.ambient = amb;
  pair.sizes = state_sizes(g);
  pair.forms = assemble_flow_forms(g, par, amb);
  const FlowForms& f = pair.forms;
  const DiscreteSizes& sz = pair.sizes;

  pair.G.Mp = f.Mp;
  pair.G.Mu = f.Mu;
  pair.G.Kb = f.Kb;
  pair.G.Mw = f.Mb;
  pair.G.p_weights = f.p_weights;
  pair.G.beam_load = f.f1;
  pair.G.meas = f.meas;

  pair.Cp = 0.5 * (f.Np - SpMat(f.Np.transpose()));
  pair.Cu = 0.5 * (f.Nu - SpMat(f.Nu.transpose()));

  pair.u_map.assign(sz.n_u, -1);
  for (int nd = 0; nd < g.n_nodes; ++nd)
    for (int c = 0; c < 2; ++c)
      if (u_dof_role(g, nd, c) == DofRole::free_dof) {
        pair.u_map[2 * nd + c] = static_cast<int>(pair.free_dofs.size());
        pair.free_dofs.push_back(2 * nd + c);
      }
  const int n_free = static_cast<int>(pair.free_dofs.size());
  pair.off_p = 0;
  pair.off_u = sz.n_p;
  pair.off_w1 = sz.n_p + n_free;
  pair.off_w2 = pair.off_w1 + sz.n_w;
  pair.n = pair.off_w2 + sz.n_w;
  for (int k = 0; k < n_free; ++k) pair.u_map[pair.free_dofs[k]] += pair.off_u;
  for (int nd = 0; nd < g.n_nodes; ++nd)
    for (int c = 0; c < 2; ++c)
      if (u_dof_role(g, nd, c) == DofRole::shared) {
        ensure(c == 1, "assemble: shared trace must be the normal component");
        pair.u_map[2 * nd + c] = pair.off_w2 + beam_value_dof(g.node_i(nd));
      }

  std::vector<Trip> tG, tK;
  auto push_block = [](std::vector<Trip>& t, const SpMat& M, int ro, int co, double sgn) {
    for (int k = 0; k < M.outerSize(); ++k)
      for (SpMat::InnerIterator it(M, k); it; ++it)
        t.emplace_back(ro + static_cast<int>(it.row()), co + static_cast<int>(it.col()),
                       sgn * it.value());
  };

  push_block(tG, f.Mp, pair.off_p, pair.off_p, 1.0);
  for (int k = 0; k < f.Mu.outerSize(); ++k)
    for (SpMat::InnerIterator it(f.Mu, k); it; ++it) {
      const int ra = pair.u_map[it.row()], rb = pair.u_map[it.col()];
      if (ra >= 0 && rb >= 0) tG.emplace_back(ra, rb, it.value());
    }
  push_block(tG, f.Kb, pair.off_w1, pair.off_w1, 1.0);
  push_block(tG, f.Mb, pair.off_w2, pair.off_w2, 1.0);

  push_block(tK, pair.Cp, pair.off_p, pair.off_p, -1.0);
  for (int k = 0; k < f.D.outerSize(); ++k)
    for (SpMat::InnerIterator it(f.D, k); it; ++it) {
      const int rb = pair.u_map[it.col()];
      if (rb < 0) continue;
      tK.emplace_back(pair.off_p + static_cast<int>(it.row()), rb, -it.value());
      tK.emplace_back(rb, pair.off_p + static_cast<int>(it.row()), it.value());
    }
  const SpMat A = f.Su + par.eta * f.Mu + pair.Cu;
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it) {
      const int ra = pair.u_map[it.row()], rb = pair.u_map[it.col()];
      if (ra >= 0 && rb >= 0) tK.emplace_back(ra, rb, -it.value());
    }
  for (int k = 0; k < f.Kb.outerSize(); ++k)
    for (SpMat::InnerIterator it(f.Kb, k); it; ++it) {
      tK.emplace_back(pair.off_w1 + static_cast<int>(it.row()),
                      pair.off_w2 + static_cast<int>(it.col()), it.value());
      tK.emplace_back(pair.off_w2 + static_cast<int>(it.row()),
                      pair.off_w1 + static_cast<int>(it.col()), -it.value());
    }

  pair.Gr.resize(pair.n, pair.n);
  pair.Gr.setFromTriplets(tG.begin(), tG.end());
  pair.Gr.makeCompressed();
  pair.Kr.resize(pair.n, pair.n);
  pair.Kr.setFromTriplets(tK.begin(), tK.end());
  pair.Kr.makeCompressed();

  pair.G_solver = std::make_shared<Eigen::SimplicialLDLT<SpMat>>();
  pair.G_solver->compute(pair.Gr);
  ensure(pair.G_solver->info() == Eigen::Success,
         "assemble: Gram factorization failed (indefinite energy matrix)");
  return pair;
}

// Viscous plus drag dissipation by direct quadrature of the velocity field.
// Deliberately does not touch the assembled matrices so the energy identity
// test has two independent evaluation paths.
inline double dissipation(const StateVector& v, const Grid& g, const PhysicalParams& par) {
  const DiscreteSizes sz = state_sizes(g);
  ensure(v.u.size() == sz.n_u, "dissipation: velocity size mismatch");
  const QuadRule& q = g.quad;
  const int nq = static_cast<int>(q.xi.size());
  double total = 0.0;
  for (int c = 0; c < g.n_cells; ++c) {
    const auto nodes = g.cell_nodes(c);
    for (int gi = 0; gi < nq; ++gi)
      for (int gj = 0; gj < nq; ++gj) {
        const double wq = q.w[gi] * q.w[gj] * g.hx * g.hy;
        const Q1Basis b = q1_basis(q.xi[gi], q.xi[gj]);
        cplx u[2] = {0.0, 0.0};
        cplx grad[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
        for (int m = 0; m < 4; ++m) {
          const double dx = b.dxi[m] / g.hx, dy = b.deta[m] / g.hy;
          for (int cc = 0; cc < 2; ++cc) {
            const cplx coef = v.u[2 * nodes[m] + cc];
            u[cc] += coef * b.val[m];
            grad[cc][0] += coef * dx;
            grad[cc][1] += coef * dy;
          }
        }
        const cplx e01 = 0.5 * (grad[0][1] + grad[1][0]);
        const cplx div = grad[0][0] + grad[1][1];
        const double eps2 = std::norm(grad[0][0]) + std::norm(grad[1][1]) +
                            2.0 * std::norm(e01);
        total += wq * (2.0 * par.nu * eps2 + par.lambda * std::norm(div) +
                       par.eta * (std::norm(u[0]) + std::norm(u[1])));
      }
  }
  return total;
}

inline VecC apply_K(const OperatorPair& pair, const VecC& x) {
  return apply_real(pair.Kr, x);
}

inline VecC apply_G(const OperatorPair& pair, const VecC& x) {
  return apply_real(pair.Gr, x);
}

inline VecC solve_G(const OperatorPair& pair, const VecC& rhs) {
  VecR re = pair.G_solver->solve(rhs.real());
  VecR im = pair.G_solver->solve(rhs.imag());
  ensure(pair.G_solver->info() == Eigen::Success, "solve_G: Gram solve failed");
  VecC y(rhs.size());
  y.real() = re;
  y.imag() = im;
  return y;
}

inline StateVector apply_generator(const OperatorPair& pair, const StateVector& v) {
  return pair.scatter(solve_G(pair, apply_K(pair, pair.gather(v))));
}

inline SpMat assemble_adjoint(const OperatorPair& pair) {
  return SpMat(pair.Kr.transpose());
}

// G-norm of a reduced vector.
inline double reduced_norm(const OperatorPair& pair, const VecC& x) {
  return std::sqrt(std::max(0.0, apply_G(pair, x).dot(x).real()));
}

inline StateVector null_vector(const OperatorPair& pair) {
  StateVector v0 = build_null_state(pair.G);
  const VecC x0 = pair.gather(v0);
  const double n0 = reduced_norm(pair, x0);
  const double r = reduced_norm(pair, solve_G(pair, apply_K(pair, x0))) / n0;
  ensure(r <= 1e-8, "null_vector: residual exceeds solver tolerance");
  return v0;
}

}  // namespace flowstab
