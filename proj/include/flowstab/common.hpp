#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace flowstab {

using cplx = std::complex<double>;
using VecR = Eigen::VectorXd;
using VecC = Eigen::VectorXcd;
using MatR = Eigen::MatrixXd;
using MatC = Eigen::MatrixXcd;
using SpMat = Eigen::SparseMatrix<double>;
using SpMatC = Eigen::SparseMatrix<cplx>;
using Trip = Eigen::Triplet<double>;

inline void ensure(bool ok, const std::string& msg) {
  if (!ok) throw std::runtime_error(msg);
}

inline bool finite(double v) { return std::isfinite(v); }

// Real sparse matrix times complex vector, component by component.
inline VecC apply_real(const SpMat& M, const VecC& x) {
  VecR xr = x.real(), xi = x.imag();
  VecR yr = M * xr, yi = M * xi;
  VecC y(M.rows());
  y.real() = yr;
  y.imag() = yi;
  return y;
}

}  // namespace flowstab
