#pragma once

#include <span>
#include <vector>

#include "fracquad/common.hpp"
#include "fracquad/fem.hpp"
#include "fracquad/sparse.hpp"

namespace fracquad {

/// Distances from the real axis to the nearest poles of the transformed
/// resolvent integrand: kappa1 = alpha (pi - arctan beta) from the operator
/// spectrum, kappa2 = (1 - alpha) pi from the scalar denominator.
struct PoleConstants {
  double kappa1 = 0.0;
  double kappa2 = 0.0;

  double min() const { return kappa1 < kappa2 ? kappa1 : kappa2; }
};

/// Throws std::invalid_argument unless 0 < alpha < 1 and beta >= 0.
PoleConstants pole_constants(double alpha, double beta);

struct QuadratureNode {
  int index = 0;       // n in -M..N
  double shift = 0.0;  // exp(-n tau / alpha)
  double weight = 0.0;
};

/// Truncated trapezoid rule for
///   (A^alpha + b)^{-1} = sin(pi alpha)/(alpha pi) int (1 + e^{-s/alpha} A)^{-1} / (e^s + 2b cos(pi alpha) + b^2 e^{-s}) ds
/// with nodes s = n tau, n = -M..N.
class QuadraturePlan {
 public:
  /// Throws std::invalid_argument on alpha outside (0,1), b < 0, beta < 0,
  /// tau <= 0 or negative M, N.
  QuadraturePlan(double alpha, double b, double beta, double tau, int m_neg, int n_pos);

  double alpha() const { return alpha_; }
  double b() const { return b_; }
  double beta() const { return beta_; }
  double tau() const { return tau_; }
  int m_neg() const { return m_neg_; }
  int n_pos() const { return n_pos_; }
  double kappa1() const { return kappa_.kappa1; }
  double kappa2() const { return kappa_.kappa2; }
  const PoleConstants& poles() const { return kappa_; }

  std::span<const QuadratureNode> nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }

  /// Sum of all weights, in node order.
  double weight_sum() const;

  /// Same alpha, tau, M and N: identical shifts, so one set of resolvent
  /// solves serves both plans.
  bool shares_shifts_with(const QuadraturePlan& other) const;

 private:
  double alpha_;
  double b_;
  double beta_;
  double tau_;
  int m_neg_;
  int n_pos_;
  PoleConstants kappa_;
  std::vector<QuadratureNode> nodes_;
};

QuadraturePlan plan_explicit(double alpha, double b, double beta, double tau, int m_neg, int n_pos);

/// Step sizes tried by plan_from_tolerance, largest first:
/// 1, 3/4, 1/2, 3/8, ..., 1/64.
std::vector<double> tau_ladder();

/// The logarithmic/angular prefactor C(tau) of the quadrature error bound
/// (reciprocal sines, unspecified constants set to 1).
double quadrature_prefactor(const PoleConstants& poles, double alpha, double tau);

/// M and N balancing the three error terms for a given tau (rounded up, clamped at 0).
struct TruncationCounts {
  int m_neg = 0;
  int n_pos = 0;
};
TruncationCounts balanced_counts(double alpha, double b, double beta, double tau);

/// C(tau)/b * exp(-sqrt(pi min(kappa) ((1 + 1/alpha) M + N))).
double tolerance_estimate(double alpha, double b, double beta, double tau, int m_neg, int n_pos);

class PlanningError : public Error {
 public:
  PlanningError(const std::string& what, double best_bound) : Error(what), best_bound_(best_bound) {}
  double best_bound() const { return best_bound_; }

 private:
  double best_bound_;
};

/// Largest tau on tau_ladder() whose balanced plan meets tolerance_estimate < tol.
/// Requires tol in (0, 1) and b > 0; throws PlanningError when no ladder step
/// reaches the tolerance.
QuadraturePlan plan_from_tolerance(double alpha, double b, double beta, double tol);

/// Decay factors of the a-priori error bound with constants dropped.
struct ErrorBound {
  double quadrature = 0.0;        // exp(-2 pi min(kappa) / tau) / b
  double truncation_upper = 0.0;  // exp(-N tau)
  double truncation_lower = 0.0;  // b^-2 exp(-(1 + 1/alpha) M tau)
};
ErrorBound error_bound(const QuadraturePlan& plan);

class QuadratureSolveError : public Error {
 public:
  QuadratureSolveError(int node_index, const std::string& what) : Error(what), node_index_(node_index) {}
  int node_index() const { return node_index_; }

 private:
  int node_index_;
};

struct ApplyOptions {
  /// Worker threads for the independent shifted solves; the weighted sum is
  /// always accumulated in node order n = -M..N, so results do not depend on it.
  int threads = 1;
};

/// U = sum_n w_n x_n with (M + s_n K) x_n = load.
CVector apply_inverse(const SparseComplex& mass, const SparseComplex& stiff, const QuadraturePlan& plan,
                      const CVector& load, const ApplyOptions& options = {});

GridFunction apply_inverse(const DiscreteOperator& op, const QuadraturePlan& plan, const CVector& load,
                           const ApplyOptions& options = {});

/// Evaluates several plans that share their shifts (differing only in b)
/// against several loads with one factorization per node.
/// result[p][l] belongs to plans[p] and loads[l].
std::vector<std::vector<CVector>> apply_inverse_batch(const SparseComplex& mass, const SparseComplex& stiff,
                                                      std::span<const QuadraturePlan> plans,
                                                      std::span<const CVector> loads,
                                                      const ApplyOptions& options = {});

}  // namespace fracquad
