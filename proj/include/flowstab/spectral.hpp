#pragma once

#include <algorithm>
#include <cstring>
#include <limits>
#include <vector>

#include <Eigen/SparseLU>

#include "generator.hpp"

namespace flowstab {

struct ResolventSample {
  double beta = 0.0;
  double norm_estimate = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct SweepResult {
  std::vector<ResolventSample> samples;  // nonnegative frequencies
  double sup_estimate = 0.0;
  double sup_beta = 0.0;
  bool all_converged = true;
  double h = 0.0, beta_max = 0.0, spacing = 0.0;

  // Negative frequencies carry the same norm by real-operator symmetry.
  std::vector<ResolventSample> mirrored() const {
    std::vector<ResolventSample> full;
    full.reserve(2 * samples.size());
    for (auto it = samples.rbegin(); it != samples.rend(); ++it)
      if (it->beta > 0.0) {
        ResolventSample s = *it;
        s.beta = -s.beta;
        full.push_back(s);
      }
    full.insert(full.end(), samples.begin(), samples.end());
    return full;
  }
};

inline std::uint64_t mix_seed(std::uint64_t seed, double beta) {
  std::uint64_t b;
  static_assert(sizeof(b) == sizeof(beta));
  std::memcpy(&b, &beta, sizeof(b));
  b ^= seed + 0x9e3779b97f4a7c15ull + (b << 6) + (b >> 2);
  return b;
}

inline VecC random_reduced(int n, std::uint64_t seed, bool complex_valued = true) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  VecC z(n);
  for (int i = 0; i < n; ++i) z[i] = cplx(nd(rng), complex_valued ? nd(rng) : 0.0);
  return z;
}

// G-orthogonal projector onto the complement of the steady state.
struct Deflator {
  VecC x0, Gx0;
  double n0sq = 1.0;
  explicit Deflator(const OperatorPair& pair) {
    x0 = pair.gather(build_null_state(pair.G));
    Gx0 = apply_G(pair, x0);
    n0sq = Gx0.dot(x0).real();
  }
  void project(VecC& x) const { x -= (Gx0.dot(x) / n0sq) * x0; }
};

// Factorization of (i beta G - K).  At beta = 0 that matrix is singular with
// the steady state spanning both kernels, so a bordered system pins the
// complement solution instead.
class ResolventSolver {
 public:
  ResolventSolver(const OperatorPair& pair, double beta)
      : pair_(&pair), beta_(beta), defl_(pair), n_(pair.n) {
    bordered_ = (beta == 0.0);
    SpMatC A;
    if (!bordered_) {
      const SpMatC Gc = pair.Gr.cast<cplx>();
      const SpMatC Kc = pair.Kr.cast<cplx>();
      A = Gc * cplx(0.0, beta);
      A -= Kc;
    } else {
      std::vector<Eigen::Triplet<cplx>> t;
      t.reserve(pair.Kr.nonZeros() + 2 * n_);
      for (int k = 0; k < pair.Kr.outerSize(); ++k)
        for (SpMat::InnerIterator it(pair.Kr, k); it; ++it)
          t.emplace_back(it.row(), it.col(), cplx(-it.value(), 0.0));
      for (int i = 0; i < n_; ++i) {
        const cplx g = defl_.Gx0[i];
        if (g != cplx(0.0)) {
          t.emplace_back(i, n_, g);
          t.emplace_back(n_, i, g);
        }
      }
      A.resize(n_ + 1, n_ + 1);
      A.setFromTriplets(t.begin(), t.end());
    }
    A.makeCompressed();
    lu_.compute(A);
    ensure(lu_.info() == Eigen::Success, "resolvent factorization failed");
  }

  const Deflator& deflator() const { return defl_; }
  double beta() const { return beta_; }

  // y with (i beta G - K) y = b restricted to the complement.
  VecC solve(const VecC& b, bool adjoint = false) const {
    if (!bordered_) {
      return adjoint ? VecC(lu_.adjoint().solve(b)) : VecC(lu_.solve(b));
    }
    VecC bb(n_ + 1);
    bb.head(n_) = b;
    bb[n_] = 0.0;
    VecC y = adjoint ? VecC(lu_.adjoint().solve(bb)) : VecC(lu_.solve(bb));
    return y.head(n_);
  }

 private:
  const OperatorPair* pair_;
  double beta_;
  bool bordered_;
  Deflator defl_;
  // mutable because SparseLU::adjoint() is non-const in this Eigen release
  // even though the view leaves the factors untouched
  mutable Eigen::SparseLU<SpMatC> lu_;
  int n_;
};

struct ResolventInfo {
  double residual = 0.0;
};

inline StateVector solve_resolvent(const OperatorPair& pair, double beta,
                                   const StateVector& rhs, ResolventInfo* info = nullptr) {
  ensure(finite(beta), "solve_resolvent: beta must be finite");
  ResolventSolver rs(pair, beta);
  VecC r = pair.gather(rhs);
  rs.deflator().project(r);
  const VecC b = apply_G(pair, r);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    if (info) info->residual = 0.0;
    return pair.scatter(VecC::Zero(pair.n));
  }
  VecC y = rs.solve(b);
  rs.deflator().project(y);
  const VecC res = cplx(0.0, beta) * apply_G(pair, y) - apply_K(pair, y) - b;
  const double rel = res.norm() / bnorm;
  ensure(rel <= 1e-8, "solve_resolvent: residual above tolerance");
  if (info) info->residual = rel;
  return pair.scatter(y);
}

// Largest G-norm gain of the restricted resolvent by power iteration on the
// solve/adjoint-solve composition; every adjoint is taken in the G inner
// product, which turns into a plain adjoint factor solve.
inline ResolventSample resolvent_norm(const OperatorPair& pair, double beta,
                                      double tol = 1e-4, int max_iter = 200,
                                      std::uint64_t seed = 20240901ull) {
  ensure(finite(beta) && tol > 0.0, "resolvent_norm: bad arguments");
  ResolventSolver rs(pair, beta);
  const Deflator& P = rs.deflator();
  auto gnorm = [&](const VecC& z) {
    return std::sqrt(std::max(0.0, apply_G(pair, z).dot(z).real()));
  };
  VecC z = random_reduced(pair.n, mix_seed(seed, beta));
  P.project(z);
  z /= gnorm(z);
  ResolventSample out;
  out.beta = beta;
  double prev = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    VecC w = rs.solve(apply_G(pair, z));
    P.project(w);
    const double gain = gnorm(w);
    VecC z2 = rs.solve(apply_G(pair, w), /*adjoint=*/true);
    P.project(z2);
    const double zn = gnorm(z2);
    out.iterations = it;
    out.norm_estimate = gain;
    if (zn == 0.0 || gain == 0.0) break;
    z = z2 / zn;
    if (it > 1 && std::abs(gain - prev) <= tol * gain) {
      out.converged = true;
      break;
    }
    prev = gain;
  }
  return out;
}

inline SweepResult resolvent_sweep(const OperatorPair& pair, double beta_max,
                                   int n_samples, double tol = 1e-4,
                                   std::uint64_t seed = 20240901ull) {
  ensure(beta_max > 1.0, "resolvent_sweep: range must straddle the unit frequency");
  ensure(n_samples >= 3, "resolvent_sweep: need at least three samples");
  std::vector<double> betas;
  for (int i = 0; i < n_samples; ++i)
    betas.push_back(beta_max * static_cast<double>(i) / (n_samples - 1));
  for (double b : {0.0, 0.5, 1.0, 2.0}) {
    if (b > beta_max) continue;
    bool present = false;
    for (double x : betas)
      if (std::abs(x - b) <= 1e-12 * std::max(1.0, b)) present = true;
    if (!present) betas.push_back(b);
  }
  std::sort(betas.begin(), betas.end());
  SweepResult sw;
  sw.h = pair.grid.hx;
  sw.beta_max = beta_max;
  sw.spacing = beta_max / (n_samples - 1);
  for (double b : betas) {
    ResolventSample s = resolvent_norm(pair, b, tol, 200, seed);
    sw.all_converged = sw.all_converged && s.converged;
    if (s.converged && s.norm_estimate > sw.sup_estimate) {
      sw.sup_estimate = s.norm_estimate;
      sw.sup_beta = s.beta;
    }
    sw.samples.push_back(s);
  }
  return sw;
}

struct EigsOptions {
  double tol = 1e-8;
  int max_basis = 0;  // 0: automatic
  bool deflate = false;
  std::uint64_t seed = 777ull;
  int max_restarts = 1;
};

struct EigenReport {
  cplx shift{};
  cplx shift_used{};
  std::vector<cplx> eigenvalues;
  std::vector<double> residuals;
  std::vector<VecC> vectors;
  bool all_converged = false;
};

// Shift-invert Arnoldi on the pencil K v = lambda G v with G-orthogonal
// basis (CGS2 reorthogonalization).  Reported values are Rayleigh quotients
// of the Ritz vectors, which inherit Re lambda <= 0 from the dissipation
// identity.  A singular or near-singular shift is nudged into the right half
// plane, where the quadratic form of (K - sigma G) has strictly negative
// real part and the factorization is safe.
inline EigenReport eigs_near(const OperatorPair& pair, cplx shift, int k,
                             EigsOptions opts = {}) {
  ensure(k >= 1 && k <= pair.n / 2, "eigs_near: bad eigenpair count");
  EigenReport rep;
  rep.shift = shift;
  Deflator defl(pair);

  const SpMatC Gc = pair.Gr.cast<cplx>();
  Eigen::SparseLU<SpMatC> lu;
  cplx sigma = shift;
  const double scale = std::max(1.0, std::abs(shift));
  const SpMatC Kc = pair.Kr.cast<cplx>();
  bool factored = false;
  for (int attempt = 0; attempt < 4 && !factored; ++attempt) {
    SpMatC B = Kc;
    B -= SpMatC(Gc * sigma);
    B.makeCompressed();
    lu.compute(B);
    if (lu.info() == Eigen::Success) {
      const VecC probe = random_reduced(pair.n, 99 + attempt);
      const VecC x = lu.solve(probe);
      if (x.allFinite() && (apply_K(pair, x) - sigma * apply_G(pair, x) - probe).norm() <=
                               1e-6 * probe.norm())
        factored = true;
    }
    if (!factored) sigma += cplx(0.05 * scale * (attempt + 1), 0.0);
  }
  ensure(factored, "eigs_near: could not factor any nearby shift");
  rep.shift_used = sigma;

  auto ip = [&](const VecC& ga, const VecC& b) { return ga.dot(b); };
  const int m = std::min(pair.n - 2,
                         opts.max_basis > 0 ? opts.max_basis : std::max(3 * k + 16, 60));

  struct Cand {
    cplx lambda;
    double residual;
    VecC v;
  };
  std::vector<Cand> cands;

  const bool real_start = (shift.imag() == 0.0);
  VecC start = random_reduced(pair.n, opts.seed, !real_start);

  for (int sweep = 0; sweep <= opts.max_restarts; ++sweep) {
    std::vector<VecC> V, GV;
    MatC H = MatC::Zero(m + 1, m);
    VecC v = start;
    if (opts.deflate) defl.project(v);
    {
      VecC gv = apply_G(pair, v);
      const double nrm = std::sqrt(std::max(0.0, gv.dot(v).real()));
      ensure(nrm > 0.0, "eigs_near: degenerate start vector");
      v /= nrm;
      V.push_back(v);
      GV.push_back(apply_G(pair, v));
    }
    int mm = m;
    for (int j = 0; j < m; ++j) {
      VecC w = lu.solve(GV[j]);
      if (opts.deflate) defl.project(w);
      for (int pass = 0; pass < 2; ++pass)
        for (size_t i = 0; i < V.size(); ++i) {
          const cplx c = ip(GV[i], w);
          H(static_cast<int>(i), j) += c;
          w -= c * V[i];
        }
      VecC gw = apply_G(pair, w);
      const double hn = std::sqrt(std::max(0.0, gw.dot(w).real()));
      H(j + 1, j) = hn;
      if (hn <= 1e-12) {
        mm = j + 1;
        break;
      }
      w /= hn;
      gw /= hn;
      V.push_back(w);
      GV.push_back(gw);
    }

    Eigen::ComplexEigenSolver<MatC> ces(H.topLeftCorner(mm, mm));
    ensure(ces.info() == Eigen::Success, "eigs_near: Hessenberg eigensolve failed");
    std::vector<int> order(mm);
    for (int i = 0; i < mm; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return std::abs(ces.eigenvalues()[a]) > std::abs(ces.eigenvalues()[b]);
    });

    const int want = std::min(k + 4, mm);
    VecC restart_acc = VecC::Zero(pair.n);
    for (int idx = 0; idx < want; ++idx) {
      const int i = order[idx];
      if (std::abs(ces.eigenvalues()[i]) < 1e-14) continue;
      VecC vr = VecC::Zero(pair.n);
      for (int l = 0; l < mm; ++l) vr += ces.eigenvectors()(l, i) * V[l];
      const double n2 = vr.norm();
      if (n2 == 0.0) continue;
      vr /= n2;
      const VecC Kv = apply_K(pair, vr);
      const VecC Gv = apply_G(pair, vr);
      const cplx lambda = vr.dot(Kv) / vr.dot(Gv);
      const double res = (Kv - lambda * Gv).norm();
      if (res > opts.tol) restart_acc += vr;
      Cand c{lambda, res, vr};
      bool merged = false;
      for (auto& e : cands)
        if (std::abs(e.lambda - c.lambda) <= 1e-6 * std::max(1.0, std::abs(c.lambda))) {
          if (c.residual < e.residual) e = c;
          merged = true;
          break;
        }
      if (!merged) cands.push_back(std::move(c));
    }

    int n_conv = 0;
    for (const auto& c : cands)
      if (c.residual <= opts.tol) ++n_conv;
    if (n_conv >= std::min(k, static_cast<int>(cands.size())) || restart_acc.norm() == 0.0)
      break;
    start = restart_acc;
  }

  std::sort(cands.begin(), cands.end(), [&](const Cand& a, const Cand& b) {
    return std::abs(a.lambda - shift) < std::abs(b.lambda - shift);
  });
  if (static_cast<int>(cands.size()) > k) cands.resize(k);
  rep.all_converged = !cands.empty();
  for (const auto& c : cands) {
    rep.eigenvalues.push_back(c.lambda);
    rep.residuals.push_back(c.residual);
    rep.vectors.push_back(c.v);
    if (c.residual > opts.tol) rep.all_converged = false;
  }
  return rep;
}

struct AbscissaOptions {
  double shift_re = 0.02;
  std::vector<double> betas = {0.0, 0.7, 1.5, 3.0, 6.0, 12.0, 24.0, 48.0};
  double residual_cap = 1e-6;
  std::uint64_t seed = 777ull;
};

struct AbscissaReport {
  double abscissa = 0.0;
  cplx argmax{};
  std::vector<cplx> eigenvalues;
  bool ok = false;
};

// Least-damped spectrum on the complement of the steady state: a ladder of
// shifts marches up the imaginary axis so no slow mode with moderate
// frequency escapes the Krylov windows.
inline AbscissaReport spectral_abscissa_complement_report(const OperatorPair& pair, int k,
                                                          AbscissaOptions opts = {}) {
  AbscissaReport rep;
  for (double b : opts.betas) {
    EigsOptions eo;
    eo.deflate = true;
    eo.seed = opts.seed;
    EigenReport er = eigs_near(pair, cplx(opts.shift_re, b), k, eo);
    for (size_t i = 0; i < er.eigenvalues.size(); ++i) {
      if (er.residuals[i] > opts.residual_cap) continue;
      const cplx lam = er.eigenvalues[i];
      bool dup = false;
      for (const cplx& e : rep.eigenvalues)
        if (std::abs(e - lam) <= 1e-6 * std::max(1.0, std::abs(lam))) dup = true;
      if (!dup) rep.eigenvalues.push_back(lam);
    }
  }
  ensure(!rep.eigenvalues.empty(), "spectral abscissa: no residual-verified eigenvalues");
  rep.abscissa = -std::numeric_limits<double>::infinity();
  for (const cplx& lam : rep.eigenvalues)
    if (lam.real() > rep.abscissa) {
      rep.abscissa = lam.real();
      rep.argmax = lam;
    }
  rep.ok = rep.abscissa < 0.0;
  return rep;
}

inline double spectral_abscissa_complement(const OperatorPair& pair, int k,
                                           AbscissaOptions opts = {}) {
  AbscissaReport rep = spectral_abscissa_complement_report(pair, k, opts);
  ensure(rep.ok, "spectral abscissa: nonnegative eigenvalue on the complement");
  return rep.abscissa;
}

}  // namespace flowstab
