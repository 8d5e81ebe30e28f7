#pragma once

#include <complex>

#include <Eigen/Dense>

namespace mapgate {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};

/// Spectral form of a Hermitian generator; evaluates exp(-i H t) for any t
/// from a single eigendecomposition.
class HermitianExponential {
 public:
  explicit HermitianExponential(const CMatrix& h);
  CMatrix at(double t) const;
  const RVector& eigenvalues() const { return values_; }
  const CMatrix& eigenvectors() const { return vectors_; }

 private:
  RVector values_;
  CMatrix vectors_;
};

/// exp(-i h t) for Hermitian h.
CMatrix expm_hermitian(const CMatrix& h, double t);

/// General complex matrix exponential exp(m).
CMatrix expm(const CMatrix& m);

CMatrix kron(const CMatrix& a, const CMatrix& b);

double max_abs(const CMatrix& m);

/// max |U^dagger U - I|.
double unitarity_error(const CMatrix& u);

bool is_hermitian(const CMatrix& m, double tol);

/// Column-stacking vectorisation of a square matrix, and its inverse.
CVector vec(const CMatrix& m);
CMatrix unvec(const CVector& v, Eigen::Index dim);

}  // namespace mapgate
