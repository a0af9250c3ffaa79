#include <catch2/catch_amalgamated.hpp>

#include <flowstab/evolution.hpp>

using namespace flowstab;

namespace {
OperatorPair make_pair(int n = 8, double s = 0.5) {
  GeometryConfig geo;
  geo.nx = n;
  geo.ny = n;
  const Grid g = build_grid(geo);
  return assemble(g, PhysicalParams{}, build_ambient_field(s, g));
}

double reduced_energy(const OperatorPair& pair, const VecC& x) {
  return apply_G(pair, x).dot(x).real();
}
}  // namespace

TEST_CASE("stepping rejects a nonpositive time step", "[evolution]") {
  const OperatorPair pair = make_pair();
  CHECK_THROWS_AS(Stepper(pair, 0.0), std::runtime_error);
  CHECK_THROWS_AS(Stepper(pair, -0.1), std::runtime_error);
}

TEST_CASE("energy never grows, regardless of step size", "[evolution]") {
  const OperatorPair pair = make_pair();
  for (double dt : {0.001, 0.1, 1.0}) {
    const Stepper s(pair, dt);
    VecC x = pair.gather(random_state(pair.grid, 42, true));
    double prev = reduced_energy(pair, x);
    for (int k = 0; k < 5; ++k) {
      x = s.advance(x);
      const double e = reduced_energy(pair, x);
      CHECK(e <= prev * (1.0 + 1e-12));
      prev = e;
    }
  }
}

TEST_CASE("the steady state is a fixed point of the step", "[evolution]") {
  const OperatorPair pair = make_pair();
  const StateVector v0 = build_null_state(pair.G);
  const StateVector v1 = step(pair, v0, 0.25);
  const StateVector diff = scale_add(v1, cplx(-1.0, 0.0), v0);
  CHECK(energy_norm(diff, pair.G) <= 1e-10 * energy_norm(v0, pair.G));
}

TEST_CASE("each step loses exactly the midpoint dissipation", "[evolution]") {
  const OperatorPair pair = make_pair();
  const double dt = 0.05;
  const Stepper s(pair, dt);
  VecC x = pair.gather(random_state(pair.grid, 7, true));
  for (int k = 0; k < 6; ++k) {
    const VecC xn = s.advance(x);
    const VecC mid = 0.5 * (x + xn);
    const double d = dissipation(pair.scatter(mid), pair.grid, pair.params);
    const double lhs = reduced_energy(pair, xn) - reduced_energy(pair, x);
    const double rhs = -2.0 * dt * d;
    CHECK(std::abs(lhs - rhs) <=
          1e-11 * (reduced_energy(pair, x) + 2.0 * dt * d + std::abs(lhs)));
    x = xn;
  }
}

TEST_CASE("the step is linear over complex coefficients", "[evolution]") {
  const OperatorPair pair = make_pair();
  const Stepper s(pair, 0.1);
  const VecC x = pair.gather(random_state(pair.grid, 11, true));
  const VecC y = pair.gather(random_state(pair.grid, 12, true));
  const cplx a(0.3, -1.2), b(-0.7, 0.4);
  const VecC lhs = s.advance(a * x + b * y);
  const VecC rhs = a * s.advance(x) + b * s.advance(y);
  CHECK((lhs - rhs).norm() <= 1e-12 * (lhs.norm() + rhs.norm()));
}

TEST_CASE("fit recovers a synthetic exponential exactly", "[evolution]") {
  TrajectoryRecord rec;
  for (int k = 0; k <= 200; ++k) {
    const double t = 0.01 * k;
    rec.times.push_back(t);
    rec.energies.push_back(4.0 * std::exp(-2.0 * t));
  }
  const DecayFit fit = fit_decay_range(rec, 0.0, 2.0);
  CHECK(fit.delta == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(fit.M == Catch::Approx(2.0).epsilon(1e-12));
  CHECK(fit.r_squared >= 1.0 - 1e-12);
  CHECK(fit.n_points == 201);
  const DecayFit tail = fit_decay(rec, 0.25);
  CHECK(tail.window_t0 == Catch::Approx(1.5));
  CHECK(tail.delta == Catch::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("fit rejects malformed windows", "[evolution]") {
  TrajectoryRecord rec;
  rec.times = {0.0, 0.1, 0.2};
  rec.energies = {1.0, 0.9, 0.8};
  CHECK_THROWS_AS(fit_decay_range(rec, 5.0, 6.0), std::runtime_error);
  rec.energies[1] = -1.0;
  CHECK_THROWS_AS(fit_decay_range(rec, 0.0, 0.2), std::runtime_error);
}

TEST_CASE("a complement start stays on the complement", "[evolution]") {
  const OperatorPair pair = make_pair();
  const StateVector v0 = build_null_state(pair.G);
  StateVector v = project_complement(random_state(pair.grid, 5, true), v0, pair.G);
  const double nrm = energy_norm(v, pair.G);
  v = scale_add(zero_state(pair.grid), cplx(1.0 / nrm, 0.0), v);
  const TrajectoryRecord rec = simulate(pair, v, 1.0, 0.1);
  REQUIRE(rec.times.size() == 11);
  for (double defect : rec.complement_defect) CHECK(defect <= 1e-12);
  for (std::size_t k = 0; k + 1 < rec.times.size(); ++k)
    CHECK(rec.times[k + 1] - rec.times[k] == Catch::Approx(0.1));
}

TEST_CASE("dissipation ledger balances the energy drop at second order", "[evolution]") {
  const OperatorPair pair = make_pair();
  const Grid& g = pair.grid;

  // smooth pressure-only start, so every excited mode is resolved by the step
  StateVector v = zero_state(g);
  const int ncx = g.geo.nx / 2, ncy = g.geo.ny / 2;
  const double pi = std::numbers::pi;
  for (int J = 0; J <= ncy; ++J)
    for (int I = 0; I <= ncx; ++I) {
      const int fid = g.nid(2 * I, 2 * J);
      v.p[J * (ncx + 1) + I] =
          std::cos(pi * g.node_x(fid) / g.geo.Lx) * std::cos(pi * g.node_y(fid) / g.geo.Ly);
    }

  std::vector<double> res;
  for (double dt : {0.04, 0.02, 0.01}) {
    const TrajectoryRecord rec = simulate(pair, v, 0.5, dt);
    REQUIRE(rec.times.size() == rec.energies.size());
    REQUIRE(rec.times.size() == rec.dissipation_integral.size());
    const double e0 = rec.energies.front();
    for (std::size_t k = 0; k < rec.times.size(); ++k)
      CHECK(std::abs(rec.energies[k] + rec.dissipation_integral[k] - e0) <= 0.02 * e0);
    for (std::size_t k = 0; k + 1 < rec.times.size(); ++k)
      CHECK(rec.dissipation_integral[k + 1] >= rec.dissipation_integral[k]);
    CHECK(rec.dissipation_integral.back() > 0.0);
    res.push_back(std::abs(e0 - rec.energies.back() - rec.dissipation_integral.back()) / e0);
  }
  CHECK(res[0] / res[1] >= 3.2);  // halving dt shrinks the residual about fourfold
  CHECK(res[1] / res[2] >= 3.2);
  CHECK(res[2] <= 2e-3);
}
