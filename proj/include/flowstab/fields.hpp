#pragma once

#include <random>

#include <Eigen/SparseCholesky>

#include "grid.hpp"

namespace flowstab {

// Discrete spaces.  Velocity is bilinear on the grid; pressure is bilinear on
// the 2:1 coarsened mesh (the classical iso-P2 pairing, which leaves constants
// as the only divergence-orphan pressure mode); both beam unknowns live in the
// clamped cubic Hermite space on the top edge, value and slope per interior
// node.  The beam velocity's value DOFs double as the normal velocity trace on
// the elastic segment.

struct DiscreteSizes {
  int ncx = 0, ncy = 0;  // coarse cell counts
  int n_p = 0, n_u = 0, n_w = 0;
};

inline DiscreteSizes state_sizes(const Grid& g) {
  ensure(g.geo.nx % 2 == 0 && g.geo.ny % 2 == 0,
         "state_sizes: cell counts must be even for the coarse pressure mesh");
  DiscreteSizes s;
  s.ncx = g.geo.nx / 2;
  s.ncy = g.geo.ny / 2;
  s.n_p = (s.ncx + 1) * (s.ncy + 1);
  s.n_u = 2 * g.n_nodes;
  s.n_w = 2 * (g.geo.nx - 1);
  return s;
}

struct StateVector {
  VecC p, u, w1, w2;
};

inline StateVector zero_state(const Grid& g) {
  const DiscreteSizes s = state_sizes(g);
  StateVector v;
  v.p = VecC::Zero(s.n_p);
  v.u = VecC::Zero(s.n_u);
  v.w1 = VecC::Zero(s.n_w);
  v.w2 = VecC::Zero(s.n_w);
  return v;
}

// Velocity trace conditions.  The normal component vanishes on the rigid
// walls and equals the beam velocity on the elastic segment; tangential
// components stay free (slip).  At corners the vertical wall wins the
// tangent direction, and both normal conditions apply.
enum class DofRole { free_dof, essential, shared };

inline DofRole u_dof_role(const Grid& g, int node, int comp) {
  const int i = g.node_i(node), j = g.node_j(node);
  if (comp == 0) {
    return (i == 0 || i == g.geo.nx) ? DofRole::essential : DofRole::free_dof;
  }
  if (j == 0) return DofRole::essential;
  if (j == g.geo.ny) {
    return (i == 0 || i == g.geo.nx) ? DofRole::essential : DofRole::shared;
  }
  return DofRole::free_dof;
}

// Index of the beam value DOF tied to top-edge node i (1..nx-1).
inline int beam_value_dof(int i) { return 2 * (i - 1); }

inline bool state_consistent(const StateVector& v, const Grid& g, double tol = 0.0) {
  const DiscreteSizes s = state_sizes(g);
  if (v.p.size() != s.n_p || v.u.size() != s.n_u || v.w1.size() != s.n_w ||
      v.w2.size() != s.n_w)
    return false;
  for (int n = 0; n < g.n_nodes; ++n)
    for (int c = 0; c < 2; ++c) {
      const cplx uv = v.u[2 * n + c];
      switch (u_dof_role(g, n, c)) {
        case DofRole::essential:
          if (std::abs(uv) > tol) return false;
          break;
        case DofRole::shared:
          if (std::abs(uv - v.w2[beam_value_dof(g.node_i(n))]) > tol) return false;
          break;
        default: break;
      }
    }
  return v.p.allFinite() && v.u.allFinite() && v.w1.allFinite() && v.w2.allFinite();
}

inline StateVector random_state(const Grid& g, std::uint64_t seed, bool complex_valued = true) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::normal_distribution<double> nd(0.0, 1.0);
  auto draw = [&]() { return cplx(nd(rng), complex_valued ? nd(rng) : 0.0); };
  StateVector v = zero_state(g);
  for (auto& x : v.p) x = draw();
  for (auto& x : v.w1) x = draw();
  for (auto& x : v.w2) x = draw();
  for (int n = 0; n < g.n_nodes; ++n)
    for (int c = 0; c < 2; ++c) {
      switch (u_dof_role(g, n, c)) {
        case DofRole::free_dof: v.u[2 * n + c] = draw(); break;
        case DofRole::shared: v.u[2 * n + c] = v.w2[beam_value_dof(g.node_i(n))]; break;
        case DofRole::essential: break;
      }
    }
  return v;
}

// Energy Gram matrix, block diagonal across the four state blocks.  The beam
// displacement block is the bending stiffness itself, so the H0^2 pairing is
// exact at the discrete level.
struct GramMatrix {
  SpMat Mp;   // coarse pressure mass
  SpMat Mu;   // vector velocity mass (full node set)
  SpMat Kb;   // clamped Hermite bending stiffness
  SpMat Mw;   // Hermite mass
  VecR p_weights;  // row sums of Mp: integrals of the pressure basis
  VecR beam_load;  // integrals of the Hermite basis
  double meas = 0.0;
};

inline void check_sizes(const StateVector& v, const GramMatrix& G) {
  ensure(v.p.size() == G.Mp.rows() && v.u.size() == G.Mu.rows() &&
             v.w1.size() == G.Kb.rows() && v.w2.size() == G.Mw.rows(),
         "state/Gram size mismatch");
}

inline cplx energy_inner_product(const StateVector& a, const StateVector& b,
                                 const GramMatrix& G) {
  check_sizes(a, G);
  check_sizes(b, G);
  cplx r = b.p.dot(apply_real(G.Mp, a.p));
  r += b.u.dot(apply_real(G.Mu, a.u));
  r += b.w1.dot(apply_real(G.Kb, a.w1));
  r += b.w2.dot(apply_real(G.Mw, a.w2));
  return r;
}

inline double energy_norm(const StateVector& a, const GramMatrix& G) {
  return std::sqrt(std::max(0.0, energy_inner_product(a, a, G).real()));
}

// Steady state: unit pressure balanced by the static beam deflection under a
// unit load, everything else at rest.
inline StateVector build_null_state(const GramMatrix& G) {
  StateVector v;
  v.p = VecC::Constant(G.Mp.rows(), cplx(1.0, 0.0));
  v.u = VecC::Zero(G.Mu.rows());
  v.w2 = VecC::Zero(G.Mw.rows());
  Eigen::SimplicialLDLT<SpMat> chol(G.Kb);
  ensure(chol.info() == Eigen::Success, "build_null_state: bending solve failed");
  VecR w = chol.solve(G.beam_load);
  // two rounds of iterative refinement: the bending matrix conditioning grows
  // like h^-4 and downstream identities consume the residual at 1e-12 scale
  for (int it = 0; it < 2; ++it) {
    const VecR r = G.beam_load - G.Kb * w;
    w += chol.solve(r).eval();
  }
  v.w1 = VecC(w.size());
  v.w1.real() = w;
  v.w1.imag().setZero();
  return v;
}

// Mean pressure plus mean displacement; vanishes exactly on the orthogonal
// complement of the steady state because the Gram pairing against it reduces
// to these same quadrature weights.
inline cplx complement_functional(const StateVector& v, const GramMatrix& G) {
  check_sizes(v, G);
  return G.p_weights.cast<cplx>().dot(v.p) + G.beam_load.cast<cplx>().dot(v.w1);
}

inline StateVector scale_add(const StateVector& a, cplx alpha, const StateVector& b) {
  StateVector r;
  r.p = a.p + alpha * b.p;
  r.u = a.u + alpha * b.u;
  r.w1 = a.w1 + alpha * b.w1;
  r.w2 = a.w2 + alpha * b.w2;
  return r;
}

inline StateVector project_complement(const StateVector& v, const StateVector& v0,
                                      const GramMatrix& G) {
  const cplx c = energy_inner_product(v, v0, G) / energy_inner_product(v0, v0, G);
  return scale_add(v, -c, v0);
}

// Divergence-free ambient flow from the polynomial bump stream function
// psi = s * bx(x) * by(y), each factor normalized to unit peak.  The curl
// construction makes the divergence an exact cancellation of one product.
struct AmbientField {
  double s = 0.0, Lx = 1.0, Ly = 1.0;

  double bx(double x) const {
    const double t = x * (Lx - x);
    return 16.0 * t * t / (Lx * Lx * Lx * Lx);
  }
  double bxp(double x) const {
    return 32.0 * x * (Lx - x) * (Lx - 2.0 * x) / (Lx * Lx * Lx * Lx);
  }
  double by(double y) const {
    const double t = y * (Ly + y);
    return 16.0 * t * t / (Ly * Ly * Ly * Ly);
  }
  double byp(double y) const {
    return 32.0 * y * (Ly + y) * (Ly + 2.0 * y) / (Ly * Ly * Ly * Ly);
  }

  Eigen::Vector2d value(double x, double y) const {
    return {s * bx(x) * byp(y), -s * bxp(x) * by(y)};
  }
  double divergence_at(double x, double y) const {
    return s * bxp(x) * byp(y) - s * bxp(x) * byp(y);
  }
};

inline AmbientField build_ambient_field(double s, const Grid& g) {
  ensure(finite(s), "build_ambient_field: amplitude must be finite");
  return AmbientField{s, g.geo.Lx, g.geo.Ly};
}

}  // namespace flowstab
