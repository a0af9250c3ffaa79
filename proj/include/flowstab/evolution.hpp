#pragma once

#include <cmath>
#include <vector>

#include <Eigen/SparseLU>

#include "generator.hpp"

namespace flowstab {

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<double> energies;              // squared G norms
  std::vector<double> dissipation_integral;  // running trapezoid of twice the dissipation
  std::vector<double> complement_defect;     // |(state, steady state)_G|
};

struct DecayFit {
  double M = 0.0;
  double delta = 0.0;
  double r_squared = 0.0;
  double window_t0 = 0.0, window_t1 = 0.0;
  int n_points = 0;
};

// Crank-Nicolson propagator with one real factorization per step size.
// (G - dt/2 K) is nonsingular for every dt > 0 because the real part of its
// quadratic form is the energy norm plus dt/2 times the dissipation.
class Stepper {
 public:
  Stepper(const OperatorPair& pair, double dt) : pair_(&pair), dt_(dt) {
    ensure(finite(dt) && dt > 0.0, "step: dt must be positive and finite");
    SpMat A = pair.Gr - pair.Kr * (0.5 * dt);
    B_ = pair.Gr + pair.Kr * (0.5 * dt);
    A.makeCompressed();
    lu_.compute(A);
    ensure(lu_.info() == Eigen::Success, "step: factorization failed");
  }

  double dt() const { return dt_; }

  // solve (G - dt/2 K) y = rhs
  // The solves land in plain vectors first: SparseLU's supernodal kernels write
  // through raw pointers and silently misbehave on strided .real()/.imag() views.
  VecC solve_minus(const VecC& rhs) const {
    const VecR yr = lu_.solve(rhs.real().eval());
    const VecR yi = lu_.solve(rhs.imag().eval());
    ensure(lu_.info() == Eigen::Success, "step: solve failed");
    VecC y(rhs.size());
    y.real() = yr;
    y.imag() = yi;
    return y;
  }

  VecC apply_plus(const VecC& x) const { return apply_real(B_, x); }

  VecC advance(const VecC& x) const { return solve_minus(apply_plus(x)); }

 private:
  const OperatorPair* pair_;
  double dt_;
  SpMat B_;
  Eigen::SparseLU<SpMat> lu_;
};

inline StateVector step(const OperatorPair& pair, const StateVector& v, double dt) {
  Stepper s(pair, dt);
  return pair.scatter(s.advance(pair.gather(v)));
}

inline TrajectoryRecord simulate(const OperatorPair& pair, const StateVector& v_init,
                                 double T, double dt) {
  ensure(finite(T) && T > 0.0, "simulate: horizon must be positive");
  Stepper s(pair, dt);
  const long n_steps = std::max(1L, std::lround(T / dt));

  const VecC x0 = pair.gather(build_null_state(pair.G));
  const VecC Gx0 = apply_G(pair, x0);

  TrajectoryRecord rec;
  rec.times.reserve(n_steps + 1);
  VecC x = pair.gather(v_init);
  double diss_acc = 0.0;
  double d_prev = 0.0;
  for (long k = 0; k <= n_steps; ++k) {
    if (k > 0) x = s.advance(x);
    const double t = dt * k;
    const double E = apply_G(pair, x).dot(x).real();
    const double d = dissipation(pair.scatter(x), pair.grid, pair.params);
    if (k > 0) diss_acc += dt * (d_prev + d);  // trapezoid of 2*dissipation
    d_prev = d;
    rec.times.push_back(t);
    rec.energies.push_back(E);
    rec.dissipation_integral.push_back(diss_acc);
    rec.complement_defect.push_back(std::abs(Gx0.dot(x)));
  }
  return rec;
}

inline DecayFit fit_decay_range(const TrajectoryRecord& rec, double t0, double t1) {
  ensure(rec.times.size() == rec.energies.size() && !rec.times.empty(),
         "fit_decay: malformed record");
  std::vector<double> ts, ys;
  for (size_t i = 0; i < rec.times.size(); ++i) {
    const double t = rec.times[i];
    if (t < t0 || t > t1) continue;
    const double E = rec.energies[i];
    ensure(finite(E) && E > 1e-300, "fit_decay: energy not positive on the window");
    ts.push_back(t);
    ys.push_back(std::log(E));
  }
  ensure(ts.size() >= 3, "fit_decay: window has fewer than 3 samples");
  const double n = static_cast<double>(ts.size());
  double st = 0.0, sy = 0.0;
  for (size_t i = 0; i < ts.size(); ++i) {
    st += ts[i];
    sy += ys[i];
  }
  const double tb = st / n, yb = sy / n;
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (size_t i = 0; i < ts.size(); ++i) {
    stt += (ts[i] - tb) * (ts[i] - tb);
    sty += (ts[i] - tb) * (ys[i] - yb);
    syy += (ys[i] - yb) * (ys[i] - yb);
  }
  ensure(stt > 0.0, "fit_decay: degenerate time window");
  const double slope = sty / stt;
  const double intercept = yb - slope * tb;
  double ss_res = 0.0;
  for (size_t i = 0; i < ts.size(); ++i) {
    const double e = ys[i] - (intercept + slope * ts[i]);
    ss_res += e * e;
  }
  DecayFit fit;
  fit.delta = -0.5 * slope;
  fit.M = std::exp(0.5 * intercept);
  fit.r_squared = (syy > 0.0) ? std::max(0.0, 1.0 - ss_res / syy) : 1.0;
  fit.window_t0 = t0;
  fit.window_t1 = t1;
  fit.n_points = static_cast<int>(ts.size());
  ensure(finite(fit.delta), "fit_decay: non-finite rate");
  return fit;
}

// Default window: the trailing fraction of the time range.
inline DecayFit fit_decay(const TrajectoryRecord& rec, double window_fraction = 0.5) {
  ensure(window_fraction > 0.0 && window_fraction <= 1.0, "fit_decay: bad window fraction");
  const double ta = rec.times.front(), tb = rec.times.back();
  return fit_decay_range(rec, tb - window_fraction * (tb - ta), tb);
}

}  // namespace flowstab
