#pragma once

#include <functional>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include "generator.hpp"

namespace flowstab {

// Closed-form integrals of the nodal bases on the tensor mesh.
inline VecR tensor_weights(int nx, int ny, double hx, double hy) {
  VecR wx(nx + 1), wy(ny + 1);
  for (int i = 0; i <= nx; ++i) wx[i] = (i == 0 || i == nx) ? 0.5 * hx : hx;
  for (int j = 0; j <= ny; ++j) wy[j] = (j == 0 || j == ny) ? 0.5 * hy : hy;
  VecR w((nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) w[j * (nx + 1) + i] = wx[i] * wy[j];
  return w;
}

inline VecR pressure_weights(const Grid& g) {
  const DiscreteSizes sz = state_sizes(g);
  return tensor_weights(sz.ncx, sz.ncy, 2.0 * g.hx, 2.0 * g.hy);
}

struct PressureDecomposition {
  VecC q0;
  cplx c0{};
};

inline PressureDecomposition pressure_decomposition(const VecC& p, const Grid& g) {
  const VecR w = pressure_weights(g);
  ensure(p.size() == w.size(), "pressure_decomposition: size mismatch");
  PressureDecomposition d;
  d.c0 = w.cast<cplx>().dot(p) / (g.geo.Lx * g.geo.Ly);
  d.q0 = p - VecC::Constant(p.size(), d.c0);
  return d;
}

// ---------------------------------------------------------------------------
// Stationary Stokes-type oracle: eta u - div sigma(u) + grad q = f,
// div u = g, u = phi on the whole boundary, mean of q pinned to zero through
// a scalar multiplier that also absorbs the compatibility defect of g.
// The coarse pressure pairing is inf-sup stable, so no stabilization term is
// added (reported as zero).  Data enter as test-function moments; pointwise
// data are reduced to moments by the grid quadrature.

struct StokesData {
  VecC f_mom;  // velocity moments, size 2*n_nodes (interior rows used)
  VecC g_mom;  // coarse pressure moments
  VecC bc;     // nodal boundary velocity, size 2*n_nodes, interior entries 0
};

inline StokesData stokes_data_from_functions(
    const Grid& g, const std::function<Eigen::Vector2d(double, double)>& f_fun,
    const std::function<double(double, double)>& g_fun,
    const std::function<Eigen::Vector2d(double, double)>& bc_fun) {
  const DiscreteSizes sz = state_sizes(g);
  StokesData d;
  d.f_mom = VecC::Zero(sz.n_u);
  d.g_mom = VecC::Zero(sz.n_p);
  d.bc = VecC::Zero(sz.n_u);
  const QuadRule& q = g.quad;
  const int nq = static_cast<int>(q.xi.size());
  const int ncx = sz.ncx;
  auto cnid = [&](int I, int J) { return J * (ncx + 1) + I; };
  for (int cj = 0; cj < g.geo.ny; ++cj)
    for (int ci = 0; ci < g.geo.nx; ++ci) {
      const auto nodes = g.cell_nodes(g.cid(ci, cj));
      const double x0 = g.node_x(nodes[0]), y0 = g.node_y(nodes[0]);
      const std::array<int, 4> cg = {cnid(ci / 2, cj / 2), cnid(ci / 2 + 1, cj / 2),
                                     cnid(ci / 2 + 1, cj / 2 + 1), cnid(ci / 2, cj / 2 + 1)};
      for (int gi = 0; gi < nq; ++gi)
        for (int gj = 0; gj < nq; ++gj) {
          const double wq = q.w[gi] * q.w[gj] * g.hx * g.hy;
          const double x = x0 + g.hx * q.xi[gi], y = y0 + g.hy * q.xi[gj];
          const Q1Basis b = q1_basis(q.xi[gi], q.xi[gj]);
          const Q1Basis cb = q1_basis(0.5 * (ci % 2 + q.xi[gi]), 0.5 * (cj % 2 + q.xi[gj]));
          if (f_fun) {
            const Eigen::Vector2d fv = f_fun(x, y);
            for (int m = 0; m < 4; ++m) {
              d.f_mom[2 * nodes[m]] += wq * b.val[m] * fv.x();
              d.f_mom[2 * nodes[m] + 1] += wq * b.val[m] * fv.y();
            }
          }
          if (g_fun) {
            const double gv = g_fun(x, y);
            for (int I = 0; I < 4; ++I) d.g_mom[cg[I]] += wq * cb.val[I] * gv;
          }
        }
    }
  if (bc_fun)
    for (int n = 0; n < g.n_nodes; ++n)
      if (g.on_boundary(n)) {
        const Eigen::Vector2d bv = bc_fun(g.node_x(n), g.node_y(n));
        d.bc[2 * n] = bv.x();
        d.bc[2 * n + 1] = bv.y();
      }
  return d;
}

struct StokesSolution {
  VecC u;  // full velocity field, boundary values imposed exactly
  VecC q;  // mean-pinned pressure
  cplx multiplier{};
  double mom_residual = 0.0;
  double div_residual = 0.0;
  double compat_defect = 0.0;
  double stabilization = 0.0;  // none needed for the stable pairing
  double apriori_ratio = 0.0;  // (|u|_H1 + |q|) / (|f| + |g| + |phi|)
};

inline StokesSolution stokes_solve_forms(const FlowForms& f, const Grid& g,
                                         const PhysicalParams& par, const StokesData& data,
                                         double compat_tol = 1e-8) {
  validate_params(par);
  const DiscreteSizes sz = state_sizes(g);
  ensure(data.f_mom.size() == sz.n_u && data.g_mom.size() == sz.n_p &&
             data.bc.size() == sz.n_u,
         "stokes_solve: data sizes mismatch");

  // compatibility: the integral of g must equal the boundary flux of phi
  const cplx ig = data.g_mom.sum();
  const cplx flux = apply_real(f.D, data.bc).sum();
  const double compat = std::abs(ig - flux);
  ensure(compat <= compat_tol * std::max({1.0, std::abs(ig), std::abs(flux)}),
         "stokes_solve: incompatible divergence and boundary data");

  std::vector<int> imap(sz.n_u, -1);
  std::vector<int> idofs;
  for (int n = 0; n < g.n_nodes; ++n)
    if (!g.on_boundary(n))
      for (int c = 0; c < 2; ++c) {
        imap[2 * n + c] = static_cast<int>(idofs.size());
        idofs.push_back(2 * n + c);
      }
  const int ni = static_cast<int>(idofs.size());
  const int nsys = ni + sz.n_p + 1;

  const SpMat S = f.Su + par.eta * f.Mu;
  std::vector<Trip> ts;
  VecC rhs = VecC::Zero(nsys);
  for (int k = 0; k < ni; ++k) rhs[k] = data.f_mom[idofs[k]];
  for (int I = 0; I < sz.n_p; ++I) rhs[ni + I] = data.g_mom[I];

  for (int k = 0; k < S.outerSize(); ++k)
    for (SpMat::InnerIterator it(S, k); it; ++it) {
      const int ra = imap[it.row()], rb = imap[it.col()];
      if (ra < 0) continue;
      if (rb >= 0)
        ts.emplace_back(ra, rb, it.value());
      else
        rhs[ra] -= it.value() * data.bc[it.col()];
    }
  for (int k = 0; k < f.D.outerSize(); ++k)
    for (SpMat::InnerIterator it(f.D, k); it; ++it) {
      const int rb = imap[it.col()];
      const int I = static_cast<int>(it.row());
      if (rb >= 0) {
        ts.emplace_back(ni + I, rb, it.value());
        ts.emplace_back(rb, ni + I, -it.value());
      } else {
        rhs[ni + I] -= it.value() * data.bc[it.col()];
      }
    }
  for (int I = 0; I < sz.n_p; ++I) {
    ts.emplace_back(ni + I, nsys - 1, f.p_weights[I]);
    ts.emplace_back(nsys - 1, ni + I, f.p_weights[I]);
  }
  SpMat A(nsys, nsys);
  A.setFromTriplets(ts.begin(), ts.end());
  A.makeCompressed();
  Eigen::SparseLU<SpMat> lu;
  lu.compute(A);
  ensure(lu.info() == Eigen::Success, "stokes_solve: factorization failed");
  // plain temporaries: SparseLU solves cannot target strided .real()/.imag() views
  const VecR sr = lu.solve(rhs.real().eval());
  const VecR si = lu.solve(rhs.imag().eval());
  ensure(lu.info() == Eigen::Success, "stokes_solve: solve failed");
  VecC sol(nsys);
  sol.real() = sr;
  sol.imag() = si;

  StokesSolution out;
  out.compat_defect = compat;
  out.u = data.bc;
  for (int k = 0; k < ni; ++k) out.u[idofs[k]] = sol[k];
  out.q = sol.segment(ni, sz.n_p);
  out.multiplier = sol[nsys - 1];

  // block residuals of the assembled equations
  {
    const VecC mom = apply_real(S, out.u) -
                     apply_real(SpMat(f.D.transpose()), out.q) - data.f_mom;
    double num = 0.0, den = 0.0;
    for (int k = 0; k < ni; ++k) num += std::norm(mom[idofs[k]]);
    den = std::max(1e-300, data.f_mom.norm() + out.q.norm() + out.u.norm());
    out.mom_residual = std::sqrt(num) / den;
    const VecC dv = apply_real(f.D, out.u) + out.multiplier * f.p_weights.cast<cplx>() -
                    data.g_mom;
    out.div_residual = dv.norm() / std::max(1e-300, data.g_mom.norm() + out.u.norm());
  }

  // empirical a-priori constant with Riesz data norms
  {
    const double h1 = std::sqrt(std::max(
        0.0, (apply_real(f.Mu, out.u) + apply_real(f.Lu, out.u)).dot(out.u).real()));
    const double qn = std::sqrt(std::max(0.0, apply_real(f.Mp, out.q).dot(out.q).real()));

    double fn = 0.0;
    if (ni > 0) {
      std::vector<Trip> tm;
      for (int k = 0; k < f.Mu.outerSize(); ++k)
        for (SpMat::InnerIterator it(f.Mu, k); it; ++it) {
          const int ra = imap[it.row()], rb = imap[it.col()];
          if (ra >= 0 && rb >= 0) tm.emplace_back(ra, rb, it.value());
        }
      SpMat Mi(ni, ni);
      Mi.setFromTriplets(tm.begin(), tm.end());
      Eigen::SimplicialLDLT<SpMat> mldlt(Mi);
      VecC fi(ni);
      for (int k = 0; k < ni; ++k) fi[k] = data.f_mom[idofs[k]];
      const VecR zr = mldlt.solve(fi.real().eval());
      const VecR zi = mldlt.solve(fi.imag().eval());
      VecC z(ni);
      z.real() = zr;
      z.imag() = zi;
      fn = std::sqrt(std::max(0.0, fi.dot(z).real()));
    }
    Eigen::SimplicialLDLT<SpMat> pldlt(f.Mp);
    const VecR zgr = pldlt.solve(data.g_mom.real().eval());
    const VecR zgi = pldlt.solve(data.g_mom.imag().eval());
    VecC zg(sz.n_p);
    zg.real() = zgr;
    zg.imag() = zgi;
    const double gn = std::sqrt(std::max(0.0, data.g_mom.dot(zg).real()));

    double bn = 0.0;
    const auto& loop = g.boundary_loop;
    const int nb = static_cast<int>(loop.size());
    for (int k = 0; k < nb; ++k) {
      const int a = loop[k], b = loop[(k + 1) % nb];
      const double len = std::hypot(g.node_x(b) - g.node_x(a), g.node_y(b) - g.node_y(a));
      bn += 0.5 * len *
            (std::norm(data.bc[2 * a]) + std::norm(data.bc[2 * a + 1]) +
             std::norm(data.bc[2 * b]) + std::norm(data.bc[2 * b + 1]));
    }
    bn = std::sqrt(bn);
    out.apriori_ratio = (h1 + qn) / std::max(1e-300, fn + gn + bn);
  }
  return out;
}

inline StokesSolution stokes_solve(
    const std::function<Eigen::Vector2d(double, double)>& f_fun,
    const std::function<double(double, double)>& g_fun,
    const std::function<Eigen::Vector2d(double, double)>& bc_fun, const Grid& g,
    const PhysicalParams& par, double compat_tol = 1e-8) {
  const FlowForms forms = assemble_flow_forms(g, par, AmbientField{0.0, g.geo.Lx, g.geo.Ly});
  return stokes_solve_forms(forms, g, par, stokes_data_from_functions(g, f_fun, g_fun, bc_fun),
                            compat_tol);
}

// ---------------------------------------------------------------------------
// Boundary Laplace-Beltrami modes on the closed polygonal boundary curve:
// cyclic P1 mass and stiffness weighted by edge lengths.  Modes are
// mass-orthonormal, so the surrogate dual norm is a plain weighted sum of
// squared coefficients.

struct BoundaryModes {
  std::vector<int> nodes;
  MatR mass;
  VecR lambda;
  MatR modes;
  double perimeter = 0.0;
};

inline BoundaryModes boundary_modes(const Grid& g) {
  BoundaryModes bm;
  bm.nodes = g.boundary_loop;
  const int nb = static_cast<int>(bm.nodes.size());
  bm.mass = MatR::Zero(nb, nb);
  MatR stiff = MatR::Zero(nb, nb);
  for (int k = 0; k < nb; ++k) {
    const int a = k, b = (k + 1) % nb;
    const int na = bm.nodes[a], nbn = bm.nodes[b];
    const double len = std::hypot(g.node_x(nbn) - g.node_x(na), g.node_y(nbn) - g.node_y(na));
    bm.perimeter += len;
    bm.mass(a, a) += len / 3.0;
    bm.mass(b, b) += len / 3.0;
    bm.mass(a, b) += len / 6.0;
    bm.mass(b, a) += len / 6.0;
    stiff(a, a) += 1.0 / len;
    stiff(b, b) += 1.0 / len;
    stiff(a, b) -= 1.0 / len;
    stiff(b, a) -= 1.0 / len;
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<MatR> es(stiff, bm.mass);
  ensure(es.info() == Eigen::Success, "boundary_modes: eigensolve failed");
  bm.lambda = es.eigenvalues().cwiseMax(0.0);
  bm.modes = es.eigenvectors();  // mass-orthonormal columns
  return bm;
}

inline double hminushalf_from_coefficients(const BoundaryModes& bm, const VecC& coef) {
  double s = 0.0;
  for (int k = 0; k < bm.lambda.size(); ++k)
    s += std::norm(coef[k]) / std::sqrt(1.0 + bm.lambda[k]);
  return std::sqrt(s);
}

// moments interface: F holds duality pairings of the functional with the
// boundary hat functions, in boundary-loop order
inline double hminushalf_norm_moments(const VecC& F, const BoundaryModes& bm) {
  ensure(F.size() == static_cast<int>(bm.nodes.size()), "hminushalf: size mismatch");
  VecC coef(bm.modes.cols());
  for (int k = 0; k < bm.modes.cols(); ++k) coef[k] = bm.modes.col(k).cast<cplx>().dot(F);
  return hminushalf_from_coefficients(bm, coef);
}

// nodal-values interface used by the public operation
inline double hminushalf_norm(const VecC& gvals, const Grid& g) {
  const BoundaryModes bm = boundary_modes(g);
  ensure(gvals.size() == static_cast<int>(bm.nodes.size()),
         "hminushalf_norm: one value per boundary node required");
  VecC F(gvals.size());
  F.real() = bm.mass * gvals.real();
  F.imag() = bm.mass * gvals.imag();
  return hminushalf_norm_moments(F, bm);
}

// ---------------------------------------------------------------------------
// Trace estimate ratio: compares the zero-mean pressure plus the recovered
// normal-stress trace against the resolvent data terms.  The boundary stress
// functional is recovered variationally from the momentum residual, which is
// exactly the weak boundary pairing for every boundary test function.

struct MedReport {
  double lhs = 0.0, rhs = 0.0, ratio = 0.0;
  double q0_norm = 0.0, trace_norm = 0.0;
};

inline MedReport med_report(const OperatorPair& pair, double beta, const StateVector& vstar,
                            const StateVector& v) {
  const FlowForms& f = pair.forms;
  const Grid& g = pair.grid;
  check_sizes(v, pair.G);
  check_sizes(vstar, pair.G);
  const PressureDecomposition pd = pressure_decomposition(v.p, g);

  VecC F = apply_real(f.Su, v.u) + pair.params.eta * apply_real(f.Mu, v.u) +
           apply_real(pair.Cu, v.u) + cplx(0.0, beta) * apply_real(f.Mu, v.u) -
           apply_real(SpMat(f.D.transpose()), pd.q0) - apply_real(f.Mu, vstar.u);

  const BoundaryModes bm = boundary_modes(g);
  const int nb = static_cast<int>(bm.nodes.size());
  VecC Fx(nb), Fy(nb);
  for (int k = 0; k < nb; ++k) {
    Fx[k] = F[2 * bm.nodes[k]];
    Fy[k] = F[2 * bm.nodes[k] + 1];
  }
  MedReport r;
  r.trace_norm = std::hypot(hminushalf_norm_moments(Fx, bm), hminushalf_norm_moments(Fy, bm));
  r.q0_norm = std::sqrt(std::max(0.0, apply_real(f.Mp, pd.q0).dot(pd.q0).real()));
  r.lhs = r.q0_norm + r.trace_norm;
  const double nv = energy_norm(v, pair.G), ns = energy_norm(vstar, pair.G);
  const double un = std::sqrt(std::max(0.0, apply_real(f.Mu, v.u).dot(v.u).real()));
  r.rhs = std::sqrt(nv * ns) + ns + std::abs(beta) * un;
  ensure(r.rhs > 1e-14 * std::max(1.0, r.lhs), "med_report: degenerate zero data");
  r.ratio = r.lhs / r.rhs;
  return r;
}

// ---------------------------------------------------------------------------
// Two-part resolvent decomposition: part one carries the frequency load with
// homogeneous boundary values, part two carries the convective load, the
// data term and the full boundary trace.  Their sum reproduces the original
// velocity and zero-mean pressure by uniqueness of the discrete solves.

struct Case1Report {
  StokesSolution part1, part2;
  double rel_u = 0.0, rel_q = 0.0;
};

inline Case1Report case1_decomposition(const OperatorPair& pair, double beta,
                                       const StateVector& v) {
  const FlowForms& f = pair.forms;
  const Grid& g = pair.grid;
  check_sizes(v, pair.G);
  const DiscreteSizes& sz = pair.sizes;
  const PressureDecomposition pd = pressure_decomposition(v.p, g);

  const VecC Mu_u = apply_real(f.Mu, v.u);
  StokesData d1, d2;
  d1.f_mom = cplx(0.0, -beta) * Mu_u;
  d1.g_mom = VecC::Zero(sz.n_p);
  d1.bc = VecC::Zero(sz.n_u);
  d2.f_mom = apply_real(f.Su, v.u) + pair.params.eta * Mu_u + cplx(0.0, beta) * Mu_u -
             apply_real(SpMat(f.D.transpose()), pd.q0);
  d2.g_mom = apply_real(f.D, v.u);
  d2.bc = VecC::Zero(sz.n_u);
  for (int n = 0; n < g.n_nodes; ++n)
    if (g.on_boundary(n))
      for (int c = 0; c < 2; ++c) d2.bc[2 * n + c] = v.u[2 * n + c];

  Case1Report rep;
  rep.part1 = stokes_solve_forms(f, g, pair.params, d1);
  rep.part2 = stokes_solve_forms(f, g, pair.params, d2);

  const VecC du = rep.part1.u + rep.part2.u - v.u;
  const VecC dq = rep.part1.q + rep.part2.q - pd.q0;
  const double un = std::sqrt(std::max(0.0, apply_real(f.Mu, v.u).dot(v.u).real()));
  const double qn = std::sqrt(std::max(0.0, apply_real(f.Mp, pd.q0).dot(pd.q0).real()));
  rep.rel_u = std::sqrt(std::max(0.0, apply_real(f.Mu, du).dot(du).real())) /
              std::max(1e-300, un);
  rep.rel_q = std::sqrt(std::max(0.0, apply_real(f.Mp, dq).dot(dq).real())) /
              std::max(1e-300, qn);
  return rep;
}

// ---------------------------------------------------------------------------
// Potential variable: -Laplace psi = p in the volume with Neumann data w on
// the elastic segment and 0 on the walls, realized weakly; the multiplier
// pins the mean and absorbs nothing when the data are compatible.

struct ChueshovVariable {
  VecC psi;         // scalar potential, one value per grid node, mean-pinned
  VecC N0;          // recovered gradient, two entries per node
  cplx multiplier{};
  cplx compat{};    // mean pressure plus mean displacement
  double residual = 0.0;
};

inline ChueshovVariable chueshov_variable_forms(const FlowForms& f, const Grid& g,
                                                const VecC& p, const VecC& w1,
                                                double compat_tol = 1e-8) {
  const DiscreteSizes sz = state_sizes(g);
  ensure(p.size() == sz.n_p && w1.size() == sz.n_w, "chueshov_variable: size mismatch");
  ChueshovVariable out;
  out.compat = f.p_weights.cast<cplx>().dot(p) + f.f1.cast<cplx>().dot(w1);
  ensure(std::abs(out.compat) <= compat_tol,
         "chueshov_variable: incompatible data (nonzero mean load)");

  // fine scalar Laplacian with a mean multiplier
  const VecR wfine = tensor_weights(g.geo.nx, g.geo.ny, g.hx, g.hy);
  std::vector<Trip> ts;
  const QuadRule& q = g.quad;
  const int nq = static_cast<int>(q.xi.size());
  for (int c = 0; c < g.n_cells; ++c) {
    const auto nodes = g.cell_nodes(c);
    double Le[4][4] = {};
    for (int gi = 0; gi < nq; ++gi)
      for (int gj = 0; gj < nq; ++gj) {
        const double wq = q.w[gi] * q.w[gj] * g.hx * g.hy;
        const Q1Basis b = q1_basis(q.xi[gi], q.xi[gj]);
        for (int a = 0; a < 4; ++a)
          for (int b2 = 0; b2 < 4; ++b2)
            Le[a][b2] += wq * (b.dxi[a] * b.dxi[b2] / (g.hx * g.hx) +
                               b.deta[a] * b.deta[b2] / (g.hy * g.hy));
      }
    for (int a = 0; a < 4; ++a)
      for (int b2 = 0; b2 < 4; ++b2) ts.emplace_back(nodes[a], nodes[b2], Le[a][b2]);
  }
  const int n = g.n_nodes;
  for (int i = 0; i < n; ++i) {
    ts.emplace_back(i, n, wfine[i]);
    ts.emplace_back(n, i, wfine[i]);
  }
  SpMat A(n + 1, n + 1);
  A.setFromTriplets(ts.begin(), ts.end());
  A.makeCompressed();

  VecC rhs = VecC::Zero(n + 1);
  rhs.head(n) = apply_real(f.Mcf, p) + apply_real(f.Bw, w1);

  Eigen::SparseLU<SpMat> lu;
  lu.compute(A);
  ensure(lu.info() == Eigen::Success, "chueshov_variable: factorization failed");
  // plain temporaries: SparseLU solves cannot target strided .real()/.imag() views
  const VecR sr = lu.solve(rhs.real().eval());
  const VecR si = lu.solve(rhs.imag().eval());
  ensure(lu.info() == Eigen::Success, "chueshov_variable: solve failed");
  VecC sol(n + 1);
  sol.real() = sr;
  sol.imag() = si;
  out.psi = sol.head(n);
  out.multiplier = sol[n];

  VecC res(n + 1);
  res.setZero();
  {
    VecC Ax(n + 1);
    Ax.real() = A * sol.real();
    Ax.imag() = A * sol.imag();
    res = Ax - rhs;
  }
  out.residual = res.norm() / std::max(1e-300, rhs.norm());

  // nodal gradient recovery by cell averaging
  out.N0 = VecC::Zero(2 * n);
  VecR count = VecR::Zero(n);
  for (int c = 0; c < g.n_cells; ++c) {
    const auto nodes = g.cell_nodes(c);
    const double corners[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    for (int a = 0; a < 4; ++a) {
      const Q1Basis b = q1_basis(corners[a][0], corners[a][1]);
      cplx gx = 0.0, gy = 0.0;
      for (int m = 0; m < 4; ++m) {
        gx += out.psi[nodes[m]] * b.dxi[m] / g.hx;
        gy += out.psi[nodes[m]] * b.deta[m] / g.hy;
      }
      out.N0[2 * nodes[a]] += gx;
      out.N0[2 * nodes[a] + 1] += gy;
      count[nodes[a]] += 1.0;
    }
  }
  for (int i = 0; i < n; ++i) {
    out.N0[2 * i] /= count[i];
    out.N0[2 * i + 1] /= count[i];
  }
  return out;
}

inline ChueshovVariable chueshov_variable(const VecC& p, const VecC& w1, const Grid& g,
                                          double compat_tol = 1e-8) {
  const FlowForms f =
      assemble_flow_forms(g, PhysicalParams{}, AmbientField{0.0, g.geo.Lx, g.geo.Ly});
  return chueshov_variable_forms(f, g, p, w1, compat_tol);
}

// ---------------------------------------------------------------------------
// Pressure-equation identity at a resolvent pair: the pressure row of the
// system, contracted against the pressure itself.

inline double pressure_equation_check(const OperatorPair& pair, double beta,
                                      const StateVector& v, const StateVector& vstar) {
  check_sizes(v, pair.G);
  check_sizes(vstar, pair.G);
  const FlowForms& f = pair.forms;
  const cplx lhs = cplx(0.0, beta) * v.p.dot(apply_real(f.Mp, v.p));
  const cplx rhs = -v.p.dot(apply_real(pair.Cp, v.p)) - v.p.dot(apply_real(f.D, v.u)) +
                   v.p.dot(apply_real(f.Mp, vstar.p));
  const double scale = std::abs(lhs) + std::abs(rhs);
  return scale > 0.0 ? std::abs(lhs - rhs) / scale : 0.0;
}

}  // namespace flowstab
