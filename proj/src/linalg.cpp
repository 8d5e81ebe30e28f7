#include "mapgate/linalg.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace mapgate {

HermitianExponential::HermitianExponential(const CMatrix& h) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
  values_ = solver.eigenvalues();
  vectors_ = solver.eigenvectors();
}

CMatrix HermitianExponential::at(double t) const {
  CVector phases(values_.size());
  for (Eigen::Index k = 0; k < values_.size(); ++k) {
    phases(k) = std::exp(-kI * values_(k) * t);
  }
  return vectors_ * phases.asDiagonal() * vectors_.adjoint();
}

CMatrix expm_hermitian(const CMatrix& h, double t) { return HermitianExponential(h).at(t); }

CMatrix expm(const CMatrix& m) { return m.exp(); }

CMatrix kron(const CMatrix& a, const CMatrix& b) { return Eigen::kroneckerProduct(a, b).eval(); }

double max_abs(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

double unitarity_error(const CMatrix& u) {
  return max_abs(u.adjoint() * u - CMatrix::Identity(u.cols(), u.cols()));
}

bool is_hermitian(const CMatrix& m, double tol) {
  return m.rows() == m.cols() && max_abs(m - m.adjoint()) <= tol;
}

CVector vec(const CMatrix& m) { return Eigen::Map<const CVector>(m.data(), m.size()); }

CMatrix unvec(const CVector& v, Eigen::Index dim) {
  return Eigen::Map<const CMatrix>(v.data(), dim, dim);
}

}  // namespace mapgate
