#include <catch2/catch_amalgamated.hpp>

#include <flowstab/spectral.hpp>

using namespace flowstab;

namespace {
OperatorPair make_pair(int n = 8, double s = 0.5) {
  GeometryConfig geo;
  geo.nx = n;
  geo.ny = n;
  const Grid g = build_grid(geo);
  return assemble(g, PhysicalParams{}, build_ambient_field(s, g));
}
}  // namespace

TEST_CASE("seed mixing and reduced draws are deterministic", "[spectral]") {
  CHECK(mix_seed(1, 2.0) != mix_seed(1, 3.0));
  CHECK(mix_seed(1, 2.0) == mix_seed(1, 2.0));
  const VecC a = random_reduced(40, 9), b = random_reduced(40, 9), c = random_reduced(40, 10);
  CHECK((a - b).norm() == 0.0);
  CHECK((a - c).norm() > 0.0);
}

TEST_CASE("deflation removes the steady component", "[spectral]") {
  const OperatorPair pair = make_pair();
  const Deflator defl(pair);
  VecC x = random_reduced(pair.n, 4);
  defl.project(x);
  CHECK(std::abs(defl.Gx0.dot(x)) <= 1e-12 * defl.n0sq * x.norm());
}

TEST_CASE("resolvent solve meets its residual contract", "[spectral]") {
  const OperatorPair pair = make_pair();
  const StateVector rhs = random_state(pair.grid, 21, true);
  for (double beta : {0.0, 0.7, 5.0}) {
    ResolventInfo info;
    const StateVector y = solve_resolvent(pair, beta, rhs, &info);
    CHECK(info.residual <= 1e-8);
    CHECK(state_consistent(y, pair.grid, 1e-10));
  }
}

TEST_CASE("resolvent at zero data vanishes", "[spectral]") {
  const OperatorPair pair = make_pair();
  const StateVector y = solve_resolvent(pair, 1.0, zero_state(pair.grid));
  CHECK(energy_norm(y, pair.G) == 0.0);
}

TEST_CASE("real operator gives conjugation symmetry in the frequency", "[spectral]") {
  const OperatorPair pair = make_pair();
  const StateVector rhs = random_state(pair.grid, 33, true);
  StateVector conj_rhs = rhs;
  conj_rhs.p = rhs.p.conjugate();
  conj_rhs.u = rhs.u.conjugate();
  conj_rhs.w1 = rhs.w1.conjugate();
  conj_rhs.w2 = rhs.w2.conjugate();
  const StateVector yp = solve_resolvent(pair, 2.0, rhs);
  const StateVector ym = solve_resolvent(pair, -2.0, conj_rhs);
  const StateVector diff = scale_add(ym, cplx(-1.0, 0.0),
                                     StateVector{yp.p.conjugate(), yp.u.conjugate(),
                                                 yp.w1.conjugate(), yp.w2.conjugate()});
  CHECK(energy_norm(diff, pair.G) <= 1e-10 * energy_norm(yp, pair.G));
}

TEST_CASE("first resolvent identity across two frequencies", "[spectral]") {
  const OperatorPair pair = make_pair();
  const double b1 = 1.0, b2 = 3.0;
  ResolventSolver r1(pair, b1), r2(pair, b2);
  VecC r = random_reduced(pair.n, 77);
  r1.deflator().project(r);
  const VecC b = apply_G(pair, r);
  VecC y1 = r1.solve(b), y2 = r2.solve(b);
  r1.deflator().project(y1);
  r1.deflator().project(y2);
  VecC z = r2.solve(apply_G(pair, y1));
  r1.deflator().project(z);
  const VecC lhs = y1 - y2;
  const VecC rhs = cplx(0.0, b2 - b1) * z;
  CHECK((lhs - rhs).norm() <= 1e-6 * (lhs.norm() + rhs.norm()));
}

TEST_CASE("resolvent norm is even in the frequency", "[spectral]") {
  const OperatorPair pair = make_pair();
  const ResolventSample sp = resolvent_norm(pair, 1.5, 1e-8, 500);
  const ResolventSample sm = resolvent_norm(pair, -1.5, 1e-8, 500);
  CHECK(sp.converged);
  CHECK(sm.converged);
  CHECK(sp.norm_estimate == Catch::Approx(sm.norm_estimate).epsilon(1e-3));
}

TEST_CASE("sweep includes the mandatory frequencies and mirrors cleanly", "[spectral]") {
  const OperatorPair pair = make_pair();
  const SweepResult sw = resolvent_sweep(pair, 10.0, 11);
  CHECK(sw.all_converged);
  for (double must : {0.0, 0.5, 1.0, 2.0}) {
    bool found = false;
    for (const auto& s : sw.samples)
      if (s.beta == must) found = true;
    CHECK(found);
  }
  for (std::size_t k = 1; k < sw.samples.size(); ++k)
    CHECK(sw.samples[k].beta > sw.samples[k - 1].beta);
  double mx = 0.0;
  for (const auto& s : sw.samples) mx = std::max(mx, s.norm_estimate);
  CHECK(sw.sup_estimate == mx);
  const auto mir = sw.mirrored();
  CHECK(mir.size() == 2 * sw.samples.size() - 1);
  for (std::size_t k = 0; k < mir.size() / 2; ++k) {
    CHECK(mir[k].beta == -mir[mir.size() - 1 - k].beta);
    CHECK(mir[k].norm_estimate == mir[mir.size() - 1 - k].norm_estimate);
  }
}

TEST_CASE("shift zero recovers the steady eigenpair", "[spectral]") {
  const OperatorPair pair = make_pair();
  const EigenReport er = eigs_near(pair, cplx(0.0, 0.0), 3);
  REQUIRE(!er.eigenvalues.empty());
  std::size_t best = 0;
  for (std::size_t k = 1; k < er.eigenvalues.size(); ++k)
    if (std::abs(er.eigenvalues[k]) < std::abs(er.eigenvalues[best])) best = k;
  CHECK(std::abs(er.eigenvalues[best]) <= 1e-8);
  const VecC x0 = pair.gather(build_null_state(pair.G));
  const VecC v = er.vectors[best];
  const cplx ip = apply_G(pair, x0).dot(v);
  const double cosang =
      std::abs(ip) / (reduced_norm(pair, x0) * reduced_norm(pair, v));
  CHECK(cosang >= 1.0 - 1e-6);
}

TEST_CASE("computed eigenvalues stay in the stable half plane", "[spectral]") {
  const OperatorPair pair = make_pair();
  for (double beta : {1.0, 4.0}) {
    EigsOptions opts;
    opts.deflate = true;
    const EigenReport er = eigs_near(pair, cplx(0.0, beta), 6, opts);
    REQUIRE(!er.eigenvalues.empty());
    for (std::size_t k = 0; k < er.eigenvalues.size(); ++k) {
      CHECK(er.eigenvalues[k].real() <= 1e-10);
      if (er.residuals[k] <= 1e-8) CHECK(er.eigenvalues[k].real() < -1e-8);
    }
  }
}

TEST_CASE("eigen residuals are measured against the pencil", "[spectral]") {
  const OperatorPair pair = make_pair();
  const EigenReport er = eigs_near(pair, cplx(-0.3, 1.0), 4);
  REQUIRE(er.eigenvalues.size() >= 1);
  int verified = 0;
  for (std::size_t k = 0; k < er.eigenvalues.size(); ++k) {
    const VecC& v = er.vectors[k];
    const double res =
        (apply_K(pair, v) - er.eigenvalues[k] * apply_G(pair, v)).norm() / v.norm();
    CHECK(res == Catch::Approx(er.residuals[k]).margin(1e-12));
    if (res <= 1e-8) ++verified;
  }
  CHECK(verified >= 1);
}

TEST_CASE("complement abscissa is negative on the coarse grid", "[spectral]") {
  const OperatorPair pair = make_pair();
  AbscissaOptions opts;
  opts.betas = {0.0, 1.0, 3.0};
  const AbscissaReport rep = spectral_abscissa_complement_report(pair, 6, opts);
  CHECK(rep.ok);
  CHECK(rep.abscissa < 0.0);
  for (const cplx& lam : rep.eigenvalues) CHECK(lam.real() < 0.0);
}
