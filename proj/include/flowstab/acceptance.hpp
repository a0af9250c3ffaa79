#pragma once

#include <algorithm>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "diagnostics.hpp"
#include "evolution.hpp"
#include "spectral.hpp"

// Self-contained acceptance checks.  Each criterion builds its own operators,
// measures one property of the discrete model, and reports a pass/fail line
// with the measured numbers, so a red run pinpoints the broken invariant.

namespace flowstab::acceptance {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

inline std::string num(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

inline OperatorPair lab_pair(int n, double s = 0.5, PhysicalParams par = {}) {
  GeometryConfig geo;
  geo.nx = n;
  geo.ny = n;
  const Grid g = build_grid(geo);
  return assemble(g, par, build_ambient_field(s, g));
}

// Unit-energy random state orthogonal to the steady state.  Draws are band
// limited: seeded coefficients on a few smooth trace-compatible modes, so the
// same seed describes the same underlying fields on every grid and the time
// stepper resolves everything the draw excites.
inline StateVector complement_sample(const OperatorPair& pair, std::uint64_t seed) {
  const Grid& g = pair.grid;
  const double Lx = g.geo.Lx, Ly = g.geo.Ly;
  const double pi = std::numbers::pi;
  std::mt19937_64 eng(0x9e3779b97f4a7c15ull ^ (seed + 0x243f6a8885a308d3ull));
  std::normal_distribution<double> coef(0.0, 1.0);
  constexpr int kmax = 3;
  double ap[kmax + 1][kmax + 1], b1[kmax + 1][kmax + 1], b2[kmax + 1][kmax + 1];
  double c1[kmax + 1], c2[kmax + 1];
  for (int k = 0; k <= kmax; ++k)
    for (int l = 0; l <= kmax; ++l) {
      ap[k][l] = coef(eng);
      b1[k][l] = coef(eng);
      b2[k][l] = coef(eng);
    }
  for (int m = 0; m <= kmax; ++m) {
    c1[m] = coef(eng);
    c2[m] = coef(eng);
  }

  // clamped profile q(x) = (x(Lx-x))^2 * cosine series and its derivative
  const auto clamped = [&](const double* c, double x) {
    const double b = x * (Lx - x), db = Lx - 2.0 * x;
    double s = 0.0, ds = 0.0;
    for (int m = 0; m <= kmax; ++m) {
      s += c[m] * std::cos(m * pi * x / Lx);
      ds -= c[m] * std::sin(m * pi * x / Lx) * (m * pi / Lx);
    }
    const double sc = 16.0 / (Lx * Lx * Lx * Lx);
    return std::pair<double, double>{sc * b * b * s, sc * (2.0 * b * db * s + b * b * ds)};
  };

  StateVector v = zero_state(g);
  const int ncx = g.geo.nx / 2, ncy = g.geo.ny / 2;
  for (int J = 0; J <= ncy; ++J)
    for (int I = 0; I <= ncx; ++I) {
      const int fid = g.nid(2 * I, 2 * J);
      const double x = g.node_x(fid), y = g.node_y(fid);
      double s = 0.0;
      for (int k = 0; k <= kmax; ++k)
        for (int l = 0; l <= kmax; ++l) {
          if (k == 0 && l == 0) continue;
          s += ap[k][l] * std::cos(k * pi * x / Lx) * std::cos(l * pi * (y + Ly) / Ly);
        }
      v.p[J * (ncx + 1) + I] = s;
    }

  // velocity: interior sine modes vanish on the whole boundary; the vertical
  // component carries the beam profile lifted into the domain, so the nodal
  // trace matches the w2 block exactly
  for (int nd = 0; nd < g.n_nodes; ++nd) {
    const double x = g.node_x(nd), y = g.node_y(nd);
    double ux = 0.0, uy = 0.0;
    for (int k = 1; k <= kmax; ++k)
      for (int l = 1; l <= kmax; ++l) {
        const double m = std::sin(k * pi * x / Lx) * std::sin(l * pi * (y + Ly) / Ly);
        ux += b1[k][l] * m;
        uy += b2[k][l] * m;
      }
    const double lift = (y + Ly) / Ly;
    v.u[2 * nd] = ux;
    v.u[2 * nd + 1] = uy + clamped(c2, x).first * lift * lift;
  }

  for (int i = 1; i < g.geo.nx; ++i) {
    const double x = g.node_x(g.nid(i, g.geo.ny));
    const auto [q1, dq1] = clamped(c1, x);
    const auto [q2, dq2] = clamped(c2, x);
    v.w1[beam_value_dof(i)] = q1;
    v.w1[beam_value_dof(i) + 1] = dq1;
    v.w2[beam_value_dof(i)] = q2;
    v.w2[beam_value_dof(i) + 1] = dq2;
  }

  // two implicit smoothing passes damp whatever the band limit leaks into
  // under-resolved discrete modes; they keep the complement invariant exactly
  const Stepper mollify(pair, 0.1);
  VecC xs = pair.gather(v);
  xs = mollify.solve_minus(apply_G(pair, xs));
  xs = mollify.solve_minus(apply_G(pair, xs));
  v = pair.scatter(xs);

  const StateVector v0 = build_null_state(pair.G);
  StateVector out = project_complement(v, v0, pair.G);
  const double nrm = energy_norm(out, pair.G);
  ensure(nrm > 0.0, "complement_sample: degenerate draw");
  return scale_add(zero_state(g), cplx(1.0 / nrm, 0.0), out);
}

inline double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return sxy / sxx;
}

// 1. quadratic form of K against independent quadrature of the dissipation
inline CriterionResult criterion_1() {
  CriterionResult r{1, "dissipation identity", false, ""};
  double worst = 0.0;
  for (double s : {0.0, 0.5, 2.0}) {
    const OperatorPair pair = lab_pair(32, s);
    for (int k = 0; k < 100; ++k) {
      const StateVector v = random_state(pair.grid, 1000 * static_cast<int>(2 * s) + k, true);
      const VecC x = pair.gather(v);
      const double qK = apply_real(pair.Kr, x).dot(x).real();
      const double qG = std::abs(apply_real(pair.Gr, x).dot(x).real());
      const double d = dissipation(v, pair.grid, pair.params);
      const double ratio = std::abs(qK + d) / (1e-11 * (qG + d));
      worst = std::max(worst, ratio);
    }
  }
  r.pass = worst <= 1.0;
  r.detail = "max |Re(x^H K x) + dissipation| = " + num(worst) + "x tolerance over 300 states";
  return r;
}

// 2. steady state annihilated by the operator and its adjoint; bending sag
inline CriterionResult criterion_2() {
  CriterionResult r{2, "null space and bending sag", false, ""};
  const OperatorPair pair = lab_pair(64);
  const StateVector v0 = null_vector(pair);
  const VecC x0 = pair.gather(v0);
  const double n0 = reduced_norm(pair, x0);
  const double fwd = reduced_norm(pair, apply_real(pair.Kr, x0)) / n0;
  const double adj = reduced_norm(pair, apply_real(assemble_adjoint(pair), x0)) / n0;
  const double mid = v0.w1[beam_value_dof(pair.grid.geo.nx / 2)].real();
  const double sag = std::abs(mid - 1.0 / 384.0) * 384.0;
  r.pass = fwd <= 1e-10 && adj <= 1e-10 && sag <= 1e-3;
  r.detail = "forward residual " + num(fwd) + ", adjoint residual " + num(adj) +
             ", midpoint sag error " + num(sag) + " rel";
  return r;
}

// 3. orthogonality against the steady state equals the mean functional
inline CriterionResult criterion_3() {
  CriterionResult r{3, "complement characterization", false, ""};
  const OperatorPair pair = lab_pair(32);
  const StateVector v0 = build_null_state(pair.G);
  const double n0 = energy_norm(v0, pair.G);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const StateVector v = random_state(pair.grid, 500 + k, true);
    const cplx ip = energy_inner_product(v, v0, pair.G);
    const cplx fn = complement_functional(v, pair.G);
    worst = std::max(worst, std::abs(ip - fn) / (energy_norm(v, pair.G) * n0));
  }
  r.pass = worst <= 1e-12;
  r.detail = "max |(v,v0)_G - (mean p + mean w1)| / (|v||v0|) = " + num(worst);
  return r;
}

// 4. no spectrum near the imaginary axis; abscissa stable under refinement
inline CriterionResult criterion_4() {
  CriterionResult r{4, "imaginary axis exclusion", false, ""};
  double worst_re = -std::numeric_limits<double>::infinity();
  bool ok = true;
  std::vector<double> absc;
  for (int n : {32, 64}) {
    const OperatorPair pair = lab_pair(n);
    for (double beta : {0.5, 1.0, 2.0, 5.0, 10.0, 25.0}) {
      EigsOptions opts;
      opts.deflate = true;
      const EigenReport er = eigs_near(pair, cplx(0.0, beta), 10, opts);
      for (const cplx& lam : er.eigenvalues) {
        worst_re = std::max(worst_re, lam.real());
        if (lam.real() >= -1e-8 || lam.real() > 1e-10) ok = false;
      }
      if (er.eigenvalues.empty()) ok = false;
    }
    absc.push_back(spectral_abscissa_complement(pair, 8));
  }
  const bool neg = absc[0] < 0.0 && absc[1] < 0.0;
  const double grow = std::max(std::abs(absc[0]), std::abs(absc[1])) /
                      std::min(std::abs(absc[0]), std::abs(absc[1]));
  r.pass = ok && neg && grow <= 2.0;
  r.detail = "max Re lambda = " + num(worst_re) + ", abscissa 32^2 = " + num(absc[0]) +
             ", 64^2 = " + num(absc[1]) + ", refinement factor " + num(grow);
  return r;
}

// 5. uniform resolvent bound along the axis with a flat high-frequency tail
inline CriterionResult criterion_5() {
  CriterionResult r{5, "uniform resolvent bound", false, ""};
  std::vector<double> sups;
  bool ok = true;
  std::string tail_info;
  for (int n : {32, 64}) {
    const OperatorPair pair = lab_pair(n);
    const SweepResult sw = resolvent_sweep(pair, 50.0, 101);
    if (!finite(sw.sup_estimate)) ok = false;
    sups.push_back(sw.sup_estimate);
    // Sample convergence, interior maximum and tail flatness are judged on
    // the fine reference sweep.  The coarse grid only anchors the sup change:
    // beyond beta ~ 44 its discrete acoustic range ends and the norm decays
    // toward 1/dist(i beta, spectrum) instead of holding the plateau, so the
    // high-frequency band is not meaningfully sampled there.
    if (n != 64) continue;
    const auto mir = sw.mirrored();
    if (!sw.all_converged || mir.size() != 201) ok = false;
    if (std::abs(sw.sup_beta) >= 50.0 - 0.5 * sw.spacing) ok = false;  // interior max
    std::vector<double> tail;
    for (const auto& s : mir)
      if (std::abs(s.beta) > 25.0) tail.push_back(s.norm_estimate);
    std::sort(tail.begin(), tail.end());
    const double med = tail[tail.size() / 2];
    const double tmax = tail.back();
    if (tmax > 1.2 * med) ok = false;
    tail_info = " tail max/median(64) = " + num(tmax / med);
  }
  const double change = std::abs(sups[1] - sups[0]) / sups[0];
  r.pass = ok && change < 0.5;
  r.detail = "sup 32^2 = " + num(sups[0]) + ", 64^2 = " + num(sups[1]) + ", change " +
             num(100.0 * change) + "%," + tail_info;
  return r;
}

// 6. monotone exponential decay on the complement matching the abscissa
inline CriterionResult criterion_6() {
  CriterionResult r{6, "exponential decay", false, ""};
  const OperatorPair pair = lab_pair(32);
  const double a = spectral_abscissa_complement(pair, 8);
  const double T = std::min(200.0, std::max(10.0, 12.0 / std::abs(a)));
  bool ok = true;
  double worst_defect = 0.0, worst_r2 = 1.0, worst_match = 0.0, min_delta =
      std::numeric_limits<double>::infinity();
  for (int seed = 1; seed <= 5; ++seed) {
    const StateVector v = complement_sample(pair, seed);
    for (double dt : {0.01, 0.1}) {
      const TrajectoryRecord rec = simulate(pair, v, T, dt);
      for (std::size_t k = 1; k < rec.energies.size(); ++k)
        if (rec.energies[k] > rec.energies[k - 1] * (1.0 + 1e-12)) ok = false;
      for (double d : rec.complement_defect) worst_defect = std::max(worst_defect, d);
      if (dt == 0.01) {
        const DecayFit fit = fit_decay_range(rec, 0.5 * T, T);
        worst_r2 = std::min(worst_r2, fit.r_squared);
        min_delta = std::min(min_delta, fit.delta);
        worst_match = std::max(worst_match, std::abs(fit.delta - std::abs(a)) / std::abs(a));
      }
    }
  }
  r.pass = ok && worst_defect <= 1e-10 && min_delta > 0.0 && worst_r2 >= 0.99 &&
           worst_match <= 0.25;
  r.detail = "abscissa " + num(a) + ", min delta " + num(min_delta) + ", worst r2 " +
             num(worst_r2) + ", worst rate mismatch " + num(100.0 * worst_match) +
             "%, max defect " + num(worst_defect);
  return r;
}

// 7. discrete energy balance converges at second order in the step size
inline CriterionResult criterion_7() {
  CriterionResult r{7, "energy balance order", false, ""};
  const OperatorPair pair = lab_pair(32);
  const Grid& g = pair.grid;
  // smooth mean-zero pressure probe: every excited mode is resolved across
  // the whole step ladder, so only the ledger quadrature limits the balance
  StateVector v = zero_state(g);
  const int ncx = g.geo.nx / 2, ncy = g.geo.ny / 2;
  for (int J = 0; J <= ncy; ++J)
    for (int I = 0; I <= ncx; ++I) {
      const int fid = g.nid(2 * I, 2 * J);
      v.p[J * (ncx + 1) + I] = std::cos(std::numbers::pi * g.node_x(fid) / g.geo.Lx) *
                               std::cos(std::numbers::pi * g.node_y(fid) / g.geo.Ly);
    }
  std::vector<double> lx, ly;
  std::string res_info;
  for (double dt : {0.08, 0.04, 0.02, 0.01}) {
    const TrajectoryRecord rec = simulate(pair, v, 2.0, dt);
    const double res = std::abs(rec.energies.front() - rec.energies.back() -
                                rec.dissipation_integral.back()) /
                       rec.energies.front();
    lx.push_back(std::log(dt));
    ly.push_back(std::log(std::max(res, 1e-300)));
    res_info += " " + num(res);
  }
  const double order = least_squares_slope(lx, ly);
  r.pass = order >= 1.8;
  r.detail = "observed order " + num(order) + ", residuals per dt:" + res_info;
  return r;
}

// manufactured stationary solution on the unit-square configuration
inline Eigen::Vector2d mms_velocity(double x, double y) {
  const double pi = std::numbers::pi;
  const double sx = std::sin(pi * x), sy = std::sin(pi * y);
  return {pi * sx * sx * std::sin(2.0 * pi * y), -pi * std::sin(2.0 * pi * x) * sy * sy};
}

inline Eigen::Vector2d mms_forcing(double x, double y, double eta, double nu) {
  const double pi = std::numbers::pi;
  const double sx = std::sin(pi * x), sy = std::sin(pi * y);
  const double lap1 =
      2.0 * pi * pi * pi * std::sin(2.0 * pi * y) * (std::cos(2.0 * pi * x) - 2.0 * sx * sx);
  const double lap2 =
      -2.0 * pi * pi * pi * std::sin(2.0 * pi * x) * (std::cos(2.0 * pi * y) - 2.0 * sy * sy);
  const Eigen::Vector2d u = mms_velocity(x, y);
  return {eta * u.x() - nu * lap1 - pi * std::sin(pi * x) * std::cos(pi * y),
          eta * u.y() - nu * lap2 - pi * std::cos(pi * x) * std::sin(pi * y)};
}

// 8. stationary oracle: quadratic velocity convergence, compatibility gate
inline CriterionResult criterion_8() {
  CriterionResult r{8, "stationary oracle convergence", false, ""};
  const PhysicalParams par{};
  std::vector<double> lh, le;
  std::string errs;
  for (int n : {8, 16, 32, 64}) {
    GeometryConfig geo;
    geo.nx = n;
    geo.ny = n;
    const Grid g = build_grid(geo);
    const StokesSolution sol = stokes_solve(
        [&](double x, double y) { return mms_forcing(x, y, par.eta, par.nu); }, nullptr,
        nullptr, g, par);
    const QuadRule q = gauss_rule(4);
    double err2 = 0.0;
    for (int c = 0; c < g.n_cells; ++c) {
      const auto nodes = g.cell_nodes(c);
      const double x0 = g.node_x(nodes[0]), y0 = g.node_y(nodes[0]);
      for (std::size_t gi = 0; gi < q.xi.size(); ++gi)
        for (std::size_t gj = 0; gj < q.xi.size(); ++gj) {
          const Q1Basis b = q1_basis(q.xi[gi], q.xi[gj]);
          cplx uh1 = 0.0, uh2 = 0.0;
          for (int m = 0; m < 4; ++m) {
            uh1 += sol.u[2 * nodes[m]] * b.val[m];
            uh2 += sol.u[2 * nodes[m] + 1] * b.val[m];
          }
          const Eigen::Vector2d ue =
              mms_velocity(x0 + g.hx * q.xi[gi], y0 + g.hy * q.xi[gj]);
          err2 += q.w[gi] * q.w[gj] * g.hx * g.hy *
                  (std::norm(uh1 - ue.x()) + std::norm(uh2 - ue.y()));
        }
    }
    const double err = std::sqrt(err2);
    lh.push_back(std::log(1.0 / n));
    le.push_back(std::log(err));
    errs += " " + num(err);
  }
  const double order = least_squares_slope(lh, le);

  bool rejected = false;
  try {
    GeometryConfig geo;
    geo.nx = 8;
    geo.ny = 8;
    stokes_solve(nullptr, [](double, double) { return 1.0; }, nullptr, build_grid(geo), par);
  } catch (const std::exception&) {
    rejected = true;
  }
  r.pass = order >= 1.8 && rejected;
  r.detail = "L2 velocity order " + num(order) + ", errors:" + errs +
             (rejected ? ", incompatible data rejected" : ", incompatible data NOT rejected");
  return r;
}

// 9. trace estimate ratio bounded and stable under refinement
inline CriterionResult criterion_9() {
  CriterionResult r{9, "trace estimate ratio", false, ""};
  std::vector<double> maxratio;
  bool ok = true;
  for (int n : {32, 64}) {
    const OperatorPair pair = lab_pair(n);
    double mx = 0.0;
    for (double beta : {0.5, 2.0, 10.0}) {
      for (int seed = 1; seed <= 5; ++seed) {
        const StateVector vstar = complement_sample(pair, 100 * seed + 7);
        const StateVector v = solve_resolvent(pair, beta, vstar);
        const MedReport m = med_report(pair, beta, vstar, v);
        if (!finite(m.ratio)) ok = false;
        mx = std::max(mx, m.ratio);
      }
    }
    maxratio.push_back(mx);
  }
  const double grow = std::max(maxratio[0], maxratio[1]) / std::min(maxratio[0], maxratio[1]);
  r.pass = ok && grow < 2.0;
  r.detail = "max ratio 32^2 = " + num(maxratio[0]) + ", 64^2 = " + num(maxratio[1]) +
             ", refinement factor " + num(grow);
  return r;
}

// 10. resolvent velocity splits into a frequency part and a data part
inline CriterionResult criterion_10() {
  CriterionResult r{10, "two-part decomposition", false, ""};
  const OperatorPair pair = lab_pair(32);
  double worst = 0.0, worst_trace = 0.0;
  for (double beta : {0.5, 2.0, 10.0})
    for (int seed = 1; seed <= 3; ++seed) {
      const StateVector vstar = complement_sample(pair, 40 * seed + 3);
      const StateVector v = solve_resolvent(pair, beta, vstar);
      const Case1Report rep = case1_decomposition(pair, beta, v);
      worst = std::max({worst, rep.rel_u, rep.rel_q});
      for (int nd = 0; nd < pair.grid.n_nodes; ++nd)
        if (pair.grid.on_boundary(nd))
          worst_trace = std::max({worst_trace, std::abs(rep.part1.u[2 * nd]),
                                  std::abs(rep.part1.u[2 * nd + 1])});
    }
  r.pass = worst <= 1e-6 && worst_trace == 0.0;
  r.detail = "max additivity residual " + num(worst) + ", max |trace of part one| = " +
             num(worst_trace) + " (exact zero required)";
  return r;
}

// 11. potential-variable compatibility agrees with the complement functional
inline CriterionResult criterion_11() {
  CriterionResult r{11, "potential variable compatibility", false, ""};
  const OperatorPair pair = lab_pair(32);
  const StateVector v0 = build_null_state(pair.G);
  int disagreements = 0, accepted = 0;
  double worst_res = 0.0;
  for (int k = 0; k < 50; ++k) {
    StateVector v = random_state(pair.grid, 7000 + k, true);
    if (k % 2 == 0) v = project_complement(v, v0, pair.G);
    const bool member = std::abs(complement_functional(v, pair.G)) <= 1e-8;
    bool ok = true;
    try {
      const ChueshovVariable cv =
          chueshov_variable_forms(pair.forms, pair.grid, v.p, v.w1, 1e-8);
      worst_res = std::max(worst_res, cv.residual);
      ++accepted;
    } catch (const std::exception&) {
      ok = false;
    }
    if (ok != member) ++disagreements;
  }
  r.pass = disagreements == 0 && worst_res <= 1e-6 && accepted > 0;
  r.detail = std::to_string(disagreements) + " disagreements over 50 states, " +
             std::to_string(accepted) + " accepted, worst solve residual " + num(worst_res);
  return r;
}

// 12. pressure row of the resolvent system contracted against the pressure
inline CriterionResult criterion_12() {
  CriterionResult r{12, "pressure equation identity", false, ""};
  const OperatorPair pair = lab_pair(32);
  double worst = 0.0;
  for (double beta : {0.5, 1.0, 2.0, 5.0, 10.0})
    for (int seed = 1; seed <= 2; ++seed) {
      const StateVector vstar = complement_sample(pair, 11 * seed + 5);
      const StateVector v = solve_resolvent(pair, beta, vstar);
      worst = std::max(worst, pressure_equation_check(pair, beta, v, vstar));
    }
  r.pass = worst <= 1e-8;
  r.detail = "max relative residual " + num(worst) + " over 10 resolvent pairs";
  return r;
}

inline CriterionResult run_criterion(int id) {
  switch (id) {
    case 1: return criterion_1();
    case 2: return criterion_2();
    case 3: return criterion_3();
    case 4: return criterion_4();
    case 5: return criterion_5();
    case 6: return criterion_6();
    case 7: return criterion_7();
    case 8: return criterion_8();
    case 9: return criterion_9();
    case 10: return criterion_10();
    case 11: return criterion_11();
    case 12: return criterion_12();
    default: throw std::runtime_error("unknown criterion " + std::to_string(id));
  }
}

inline std::string format_result(const CriterionResult& r) {
  return "criterion " + std::to_string(r.id) + " [" + r.name + "]: " +
         (r.pass ? "PASS" : "FAIL") + " (" + r.detail + ")";
}

}  // namespace flowstab::acceptance
