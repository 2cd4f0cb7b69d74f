#pragma once

#include "fracquad/common.hpp"

namespace fracquad {

/// Small dense operator for the reference evaluators of (B^alpha + t)^{-1} f.
struct DenseOperator {
  CMatrix entries;

  explicit DenseOperator(CMatrix m);
  int size() const { return static_cast<int>(entries.rows()); }
};

class OracleError : public Error {
 public:
  using Error::Error;
};

/// V diag((lambda^alpha + t)^{-1}) V^{-1} f with the principal branch.
/// Throws OracleError when the eigenvector matrix has condition number above 1e8.
CVector eigen_fractional_apply(const DenseOperator& b, double alpha, double t, const CVector& f);

/// sin(pi alpha)/pi int_0^inf (rho + B)^{-1} f rho^alpha / (rho^{2 alpha} + 2 t cos(pi alpha) rho^alpha + t^2) d rho,
/// with rho = e^s and the trapezoid rule refined (step halved, window widened)
/// until two successive results differ by less than `tol` relative.
CVector adaptive_integral_apply(const DenseOperator& b, double alpha, double t, const CVector& f, double tol = 1e-12);

}  // namespace fracquad
