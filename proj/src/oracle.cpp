#include "fracquad/oracle.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <fmt/format.h>

namespace fracquad {
namespace {

void check_inputs(const DenseOperator& b, double alpha, double t, const CVector& f) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument(fmt::format("alpha must lie in (0, 1), got {}", alpha));
  if (!(t >= 0.0)) throw std::invalid_argument(fmt::format("t must be nonnegative, got {}", t));
  if (f.size() != b.size()) throw DimensionError(fmt::format("vector length {} for a {}x{} operator", f.size(), b.size(), b.size()));
}

// Solves H y = r in place for upper Hessenberg H (partial pivoting between adjacent rows).
void hessenberg_solve(CMatrix& h, CVector& r) {
  const int n = static_cast<int>(h.rows());
  for (int j = 0; j + 1 < n; ++j) {
    if (std::abs(h(j + 1, j)) > std::abs(h(j, j))) {
      h.row(j).tail(n - j).swap(h.row(j + 1).tail(n - j));
      std::swap(r[j], r[j + 1]);
    }
    if (h(j, j) == Complex(0.0)) throw OracleError("shifted operator is singular on the integration path");
    const Complex l = h(j + 1, j) / h(j, j);
    h.row(j + 1).tail(n - j) -= l * h.row(j).tail(n - j);
    r[j + 1] -= l * r[j];
  }
  for (int i = n - 1; i >= 0; --i) {
    if (h(i, i) == Complex(0.0)) throw OracleError("shifted operator is singular on the integration path");
    Complex acc = r[i];
    for (int k = i + 1; k < n; ++k) acc -= h(i, k) * r[k];
    r[i] = acc / h(i, i);
  }
}

class Integrand {
 public:
  Integrand(const DenseOperator& b, double alpha, double t, const CVector& f) : alpha_(alpha), t_(t) {
    Eigen::HessenbergDecomposition<CMatrix> hd(b.entries);
    h_ = hd.matrixH();
    q_ = hd.matrixQ();
    rhs_ = q_.adjoint() * f;
    scale_ = std::sin(std::numbers::pi * alpha) / std::numbers::pi;
    two_t_cos_ = 2.0 * t * std::cos(std::numbers::pi * alpha);
  }

  // Integrand at rho = e^s in the rotated basis, including the Jacobian rho.
  CVector operator()(double s) const {
    CMatrix m;
    double c;
    if (s > 0.0) {
      // phi(rho) rho (rho + H)^{-1} = phi(rho) (1 + H/rho)^{-1}
      const double e = std::exp(-s);
      const double ea = std::exp(-alpha_ * s);
      c = scale_ * ea / (1.0 + two_t_cos_ * ea + t_ * t_ * ea * ea);
      m = e * h_;
      m.diagonal().array() += 1.0;
    } else {
      const double e = std::exp(s);
      if (t_ == 0.0) {
        c = scale_ * std::exp((1.0 - alpha_) * s);
      } else {
        const double ea = std::exp(alpha_ * s);
        c = scale_ * std::exp((1.0 + alpha_) * s) / (ea * ea + two_t_cos_ * ea + t_ * t_);
      }
      m = h_;
      m.diagonal().array() += e;
    }
    CVector y = rhs_;
    hessenberg_solve(m, y);
    return c * y;
  }

  // Exponential decay rates of the integrand for s -> -inf and s -> +inf.
  double lower_decay() const { return t_ == 0.0 ? 1.0 - alpha_ : 1.0 + alpha_; }
  double upper_decay() const { return alpha_; }
  const CMatrix& q() const { return q_; }

 private:
  double alpha_;
  double t_;
  double scale_ = 0.0;
  double two_t_cos_ = 0.0;
  CMatrix h_;
  CMatrix q_;
  CVector rhs_;
};

}  // namespace

DenseOperator::DenseOperator(CMatrix m) : entries(std::move(m)) {
  if (entries.rows() != entries.cols()) throw DimensionError("dense operator must be square");
  if (!entries.allFinite()) throw std::invalid_argument("dense operator has non-finite entries");
}

CVector eigen_fractional_apply(const DenseOperator& b, double alpha, double t, const CVector& f) {
  check_inputs(b, alpha, t, f);
  const CMatrix& a = b.entries;
  auto factor = [&](Complex lambda) {
    if (!(lambda.real() > 0.0)) {
      throw OracleError(fmt::format("eigenvalue {}{:+}i is not in the right half-plane", lambda.real(), lambda.imag()));
    }
    return 1.0 / (std::pow(lambda, alpha) + t);
  };

  if ((a - a.adjoint()).norm() <= 1e-14 * a.norm()) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(a);
    if (es.info() != Eigen::Success) throw OracleError("Hermitian eigensolver failed");
    CVector g = es.eigenvectors().adjoint() * f;
    for (int i = 0; i < g.size(); ++i) g[i] *= factor(es.eigenvalues()[i]);
    return es.eigenvectors() * g;
  }

  Eigen::ComplexEigenSolver<CMatrix> es(a);
  if (es.info() != Eigen::Success) throw OracleError("eigensolver failed");
  const CMatrix& v = es.eigenvectors();
  Eigen::JacobiSVD<CMatrix> svd(v);
  const auto& sv = svd.singularValues();
  const double cond = sv[0] / sv[sv.size() - 1];
  if (!(cond <= 1e8)) {
    throw OracleError(fmt::format("eigenvector matrix condition {:.3g} exceeds 1e8; use adaptive_integral_apply", cond));
  }
  CVector g = v.partialPivLu().solve(f);
  for (int i = 0; i < g.size(); ++i) g[i] *= factor(es.eigenvalues()[i]);
  return v * g;
}

CVector adaptive_integral_apply(const DenseOperator& b, double alpha, double t, const CVector& f, double tol) {
  check_inputs(b, alpha, t, f);
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  const int n = b.size();
  if (n == 0) return CVector(0);
  const Integrand g(b, alpha, t, f);

  constexpr int max_levels = 14;
  constexpr long max_nodes = 4'000'000;
  const double tail_tol = 1e-2 * tol;
  const double spread = std::log1p(b.entries.norm());

  // Window ends are multiples of 1/2 so every refined step hits them.
  double lo = -std::ceil(2.0 * (10.0 + spread)) / 2.0;
  double hi = -lo;
  double h = 0.5;
  long nodes = 0;
  CVector previous;
  double last_diff = std::numeric_limits<double>::infinity();

  for (int level = 0; level < max_levels; ++level) {
    CVector sum = CVector::Zero(n);
    const long k_lo = std::lround(lo / h);
    const long k_hi = std::lround(hi / h);
    for (long k = k_lo; k <= k_hi; ++k) sum += g(k * h);
    nodes += k_hi - k_lo + 1;

    // Widen until the neglected tails, bounded by |g(end)| / decay, are negligible.
    CVector end = g(lo);
    while (end.norm() / g.lower_decay() > tail_tol * h * sum.norm()) {
      for (long k = std::lround(lo / h) - 1; k >= std::lround((lo - 1.0) / h); --k) sum += g(k * h);
      nodes += std::lround(1.0 / h);
      lo -= 1.0;
      end = g(lo);
      if (nodes > max_nodes) break;
    }
    end = g(hi);
    while (end.norm() / g.upper_decay() > tail_tol * h * sum.norm()) {
      for (long k = std::lround(hi / h) + 1; k <= std::lround((hi + 1.0) / h); ++k) sum += g(k * h);
      nodes += std::lround(1.0 / h);
      hi += 1.0;
      end = g(hi);
      if (nodes > max_nodes) break;
    }

    CVector current = h * sum;
    if (previous.size() == n) {
      last_diff = (current - previous).norm() / std::max(current.norm(), std::numeric_limits<double>::min());
      if (level >= 2 && last_diff < tol) return g.q() * current;
    }
    if (nodes > max_nodes) break;
    previous = std::move(current);
    h *= 0.5;
  }
  throw OracleError(fmt::format("integral did not converge to {:.3g}; last relative difference {:.3g}", tol, last_diff));
}

}  // namespace fracquad
