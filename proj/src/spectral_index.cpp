#include "fracquad/spectral_index.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <random>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

namespace fracquad {
namespace {

struct RitzExtremes {
  double min = 0.0;
  double max = 0.0;
  bool breakdown = false;
};

// Lanczos for op = S^{-1} A, self-adjoint in the inner product <x, y> = y* G x.
RitzExtremes lanczos(int n, const std::function<CVector(const CVector&)>& op, const SparseComplex& g,
                     const LanczosOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  CVector q(n);
  for (int i = 0; i < n; ++i) q[i] = Complex(uni(rng), uni(rng));
  q /= std::sqrt(std::abs(q.dot(g * q)));

  const int steps = std::min(options.max_steps, n);
  CMatrix basis(n, steps);
  CMatrix g_basis(n, steps);
  std::vector<double> diag;
  std::vector<double> off;
  RitzExtremes out;

  for (int j = 0; j < steps; ++j) {
    basis.col(j) = q;
    g_basis.col(j) = g * q;
    CVector w = op(q);
    const double a = g_basis.col(j).dot(w).real();
    diag.push_back(a);
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i <= j; ++i) w -= g_basis.col(i).dot(w) * basis.col(i);
    }
    const double b = std::sqrt(std::max(w.dot(g * w).real(), 0.0));

    const int m = j + 1;
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) t(i, i) = diag[i];
    for (int i = 0; i + 1 < m; ++i) t(i, i + 1) = t(i + 1, i) = off[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    const auto& vals = es.eigenvalues();
    out.min = vals[0];
    out.max = vals[m - 1];
    const double scale = std::max(std::abs(out.min), std::abs(out.max));

    if (b <= 1e-14 * std::max(scale, std::abs(a)) || b == 0.0) {
      out.breakdown = true;
      return out;
    }
    // Residual norm of the Ritz pair of largest magnitude.
    const int dominant = std::abs(out.min) > std::abs(out.max) ? 0 : m - 1;
    const double residual = b * std::abs(es.eigenvectors()(m - 1, dominant));
    if (m > 1 && residual <= options.rel_tol * scale) return out;

    off.push_back(b);
    q = w / b;
  }
  return out;
}

}  // namespace

std::pair<SparseComplex, SparseComplex> hermitian_split(const SparseComplex& k) {
  const SparseComplex kh = k.adjoint();
  const SparseComplex re = shift_combine(k, kh, 1.0);
  const SparseComplex im = shift_combine(k, kh, -1.0);
  std::vector<Triplet> re_t;
  std::vector<Triplet> im_t;
  for (int r = 0; r < k.size(); ++r) {
    for (int p = re.row_offsets()[r]; p < re.row_offsets()[r + 1]; ++p) {
      re_t.push_back({r, re.col_indices()[p], 0.5 * re.values()[p]});
    }
    for (int p = im.row_offsets()[r]; p < im.row_offsets()[r + 1]; ++p) {
      im_t.push_back({r, im.col_indices()[p], im.values()[p] / Complex(0.0, 2.0)});
    }
  }
  return {SparseComplex::from_triplets(k.size(), re_t), SparseComplex::from_triplets(k.size(), im_t)};
}

SpectralIndexEstimate estimate_beta(const SparseComplex& mass, const SparseComplex& stiff,
                                    const LanczosOptions& options) {
  const int n = stiff.size();
  if (mass.size() != n) throw DimensionError("mass and stiffness matrices differ in size");
  if (n == 0) throw DimensionError("empty operator");
  const auto [k_re, k_im] = hermitian_split(stiff);

  std::optional<Factorization> lu;
  try {
    lu.emplace(factorize(k_re));
  } catch (const SingularMatrixError& e) {
    throw NotAccretiveError(fmt::format("Hermitian part is singular: {}", e.what()));
  }

  // Pencil (K_re, M): K_re^{-1} M has eigenvalues 1/lambda, self-adjoint in the M inner product.
  const RitzExtremes mass_ritz = lanczos(n, [&](const CVector& x) { return lu->solve(mass * x); }, mass, options);
  if (!(mass_ritz.min > 0.0) || !(mass_ritz.max > 0.0)) {
    throw NotAccretiveError("Hermitian part of the stiffness matrix is not positive definite");
  }

  SpectralIndexEstimate est;
  est.c0_floor = 1.0 / mass_ritz.max;
  if (k_im.nonzeros() > 0) {
    const RitzExtremes ritz = lanczos(n, [&](const CVector& x) { return lu->solve(k_im * x); }, k_re, options);
    est.beta = std::max(std::abs(ritz.min), std::abs(ritz.max));
  }
  est.theta = std::atan(est.beta);
  return est;
}

SpectralIndexEstimate estimate_beta(const DiscreteOperator& op, const LanczosOptions& options) {
  return estimate_beta(op.mass, op.stiff, options);
}

}  // namespace fracquad
