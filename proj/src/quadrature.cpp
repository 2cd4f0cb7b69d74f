#include "fracquad/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

namespace fracquad {
namespace {

constexpr double pi = std::numbers::pi;

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument(fmt::format("alpha must lie in (0, 1), got {}", alpha));
  }
}

// tau sin(pi a)/(a pi) / (e^x + 2b cos(pi a) + b^2 e^-x), with the denominator
// written as (e^{x/2} - b e^{-x/2})^2 + 4b cos^2(pi a / 2) so no cancellation occurs.
double node_weight(double alpha, double b, double tau, int n) {
  const double x = n * tau;
  const double d = std::exp(0.5 * x) - b * std::exp(-0.5 * x);
  const double c = std::cos(0.5 * pi * alpha);
  const double denom = d * d + 4.0 * b * c * c;
  const double w = tau * std::sin(pi * alpha) / (alpha * pi) / denom;
  return std::isfinite(w) ? w : 0.0;
}

bool skip_node(double shift, double weight) { return weight == 0.0 || !std::isfinite(shift); }

}  // namespace

PoleConstants pole_constants(double alpha, double beta) {
  check_alpha(alpha);
  if (!(beta >= 0.0)) throw std::invalid_argument(fmt::format("beta must be nonnegative, got {}", beta));
  return {alpha * (pi - std::atan(beta)), (1.0 - alpha) * pi};
}

QuadraturePlan::QuadraturePlan(double alpha, double b, double beta, double tau, int m_neg, int n_pos)
    : alpha_(alpha), b_(b), beta_(beta), tau_(tau), m_neg_(m_neg), n_pos_(n_pos) {
  kappa_ = pole_constants(alpha, beta);
  if (!(b >= 0.0) || !std::isfinite(b)) throw std::invalid_argument(fmt::format("b must be finite and >= 0, got {}", b));
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument(fmt::format("tau must be positive, got {}", tau));
  if (m_neg < 0 || n_pos < 0) throw std::invalid_argument("M and N must be nonnegative");
  nodes_.reserve(static_cast<std::size_t>(m_neg) + n_pos + 1);
  for (int n = -m_neg; n <= n_pos; ++n) {
    nodes_.push_back({n, std::exp(-n * tau / alpha), node_weight(alpha, b, tau, n)});
  }
}

double QuadraturePlan::weight_sum() const {
  double s = 0.0;
  for (const auto& node : nodes_) s += node.weight;
  return s;
}

bool QuadraturePlan::shares_shifts_with(const QuadraturePlan& other) const {
  return alpha_ == other.alpha_ && tau_ == other.tau_ && m_neg_ == other.m_neg_ && n_pos_ == other.n_pos_;
}

QuadraturePlan plan_explicit(double alpha, double b, double beta, double tau, int m_neg, int n_pos) {
  return QuadraturePlan(alpha, b, beta, tau, m_neg, n_pos);
}

std::vector<double> tau_ladder() {
  std::vector<double> out;
  for (int k = 0; k <= 6; ++k) {
    const double p = std::ldexp(1.0, -k);
    out.push_back(p);
    if (k < 6) out.push_back(0.75 * p);
  }
  return out;
}

double quadrature_prefactor(const PoleConstants& poles, double alpha, double tau) {
  const double half_pi = 0.5 * pi;
  if (poles.kappa1 > poles.kappa2) {
    const double angle = std::min((poles.kappa1 - poles.kappa2) / alpha + (1.0 - alpha) * tau / alpha, half_pi);
    return (1.0 + std::abs(std::log(tau))) / std::sin(angle);
  }
  const double angle = std::min(tau, half_pi);
  return (1.0 + std::abs(std::log(poles.kappa2 - poles.kappa1 + alpha * tau))) / std::sin(angle);
}

TruncationCounts balanced_counts(double alpha, double b, double beta, double tau) {
  const PoleConstants poles = pole_constants(alpha, beta);
  if (!(b > 0.0)) throw std::invalid_argument("balanced truncation needs b > 0");
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  const double lead = 2.0 * pi * poles.min() / (tau * tau);
  const double log_b = std::log(b) / tau;
  TruncationCounts counts;
  counts.n_pos = std::max(0, static_cast<int>(std::ceil(lead + log_b)));
  counts.m_neg = std::max(0, static_cast<int>(std::ceil(alpha / (alpha + 1.0) * (lead - log_b))));
  return counts;
}

double tolerance_estimate(double alpha, double b, double beta, double tau, int m_neg, int n_pos) {
  const PoleConstants poles = pole_constants(alpha, beta);
  const double work = (1.0 + 1.0 / alpha) * m_neg + n_pos;
  return quadrature_prefactor(poles, alpha, tau) / b * std::exp(-std::sqrt(pi * poles.min() * work));
}

QuadraturePlan plan_from_tolerance(double alpha, double b, double beta, double tol) {
  check_alpha(alpha);
  if (!(tol > 0.0 && tol < 1.0)) throw std::invalid_argument(fmt::format("tol must lie in (0, 1), got {}", tol));
  if (!(b > 0.0)) throw std::invalid_argument(fmt::format("b must be positive, got {}", b));
  double best = std::numeric_limits<double>::infinity();
  for (double tau : tau_ladder()) {
    const TruncationCounts c = balanced_counts(alpha, b, beta, tau);
    const double est = tolerance_estimate(alpha, b, beta, tau, c.m_neg, c.n_pos);
    if (est < tol) return QuadraturePlan(alpha, b, beta, tau, c.m_neg, c.n_pos);
    best = std::min(best, est);
  }
  throw PlanningError(fmt::format("tolerance {:.3g} not reachable on the tau ladder; best bound {:.3g}", tol, best),
                      best);
}

ErrorBound error_bound(const QuadraturePlan& plan) {
  ErrorBound e;
  const double tau = plan.tau();
  e.quadrature = std::exp(-2.0 * pi * plan.poles().min() / tau) / plan.b();
  e.truncation_upper = std::exp(-plan.n_pos() * tau);
  e.truncation_lower = std::exp(-(1.0 + 1.0 / plan.alpha()) * plan.m_neg() * tau) / (plan.b() * plan.b());
  return e;
}

std::vector<std::vector<CVector>> apply_inverse_batch(const SparseComplex& mass, const SparseComplex& stiff,
                                                      std::span<const QuadraturePlan> plans,
                                                      std::span<const CVector> loads, const ApplyOptions& options) {
  const int n = mass.size();
  if (stiff.size() != n) throw DimensionError("mass and stiffness matrices differ in size");
  for (const auto& load : loads) {
    if (load.size() != n) throw DimensionError(fmt::format("load has length {}, expected {}", load.size(), n));
  }
  std::vector<std::vector<CVector>> result(plans.size(), std::vector<CVector>(loads.size(), CVector::Zero(n)));
  if (plans.empty() || loads.empty()) return result;
  for (const auto& p : plans) {
    if (!p.shares_shifts_with(plans.front())) throw std::invalid_argument("batched plans must share alpha, tau, M, N");
  }

  const auto& nodes = plans.front().nodes();
  std::vector<std::size_t> active;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    bool any = false;
    for (const auto& p : plans) any = any || !skip_node(p.nodes()[k].shift, p.nodes()[k].weight);
    if (any) active.push_back(k);
  }
  if (active.empty()) return result;

  const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(active.size())));
  ShiftedFactorizer base(mass, stiff);
  std::vector<ShiftedFactorizer> factorizers;
  factorizers.reserve(threads);
  for (int t = 0; t < threads; ++t) factorizers.emplace_back(base);

  // Solve one node: (M + s K) x = load, rescaled as (M/s + K) x = load/s for s > 1.
  auto solve_node = [&](ShiftedFactorizer& f, std::size_t k) {
    const double s = nodes[k].shift;
    std::vector<CVector> xs;
    xs.reserve(loads.size());
    try {
      if (s <= 1.0) {
        const Factorization lu = f.factorize(1.0, s);
        for (const auto& load : loads) xs.push_back(lu.solve(load));
      } else {
        const Factorization lu = f.factorize(1.0 / s, 1.0);
        for (const auto& load : loads) xs.push_back(lu.solve(load / s));
      }
    } catch (const Error& e) {
      throw QuadratureSolveError(nodes[k].index, fmt::format("shifted solve failed at node {}: {}", nodes[k].index, e.what()));
    }
    return xs;
  };

  // Nodes are solved in waves of `threads`; each wave is accumulated in node order.
  for (std::size_t start = 0; start < active.size(); start += threads) {
    const std::size_t count = std::min<std::size_t>(threads, active.size() - start);
    std::vector<std::vector<CVector>> wave(count);
    if (count == 1) {
      wave[0] = solve_node(factorizers[0], active[start]);
    } else {
      std::vector<std::exception_ptr> errors(count);
      std::vector<std::thread> workers;
      for (std::size_t t = 0; t < count; ++t) {
        workers.emplace_back([&, t] {
          try {
            wave[t] = solve_node(factorizers[t], active[start + t]);
          } catch (...) {
            errors[t] = std::current_exception();
          }
        });
      }
      for (auto& w : workers) w.join();
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    for (std::size_t t = 0; t < count; ++t) {
      const std::size_t k = active[start + t];
      for (std::size_t p = 0; p < plans.size(); ++p) {
        const double w = plans[p].nodes()[k].weight;
        if (w == 0.0) continue;
        for (std::size_t l = 0; l < loads.size(); ++l) result[p][l] += w * wave[t][l];
      }
    }
  }
  return result;
}

CVector apply_inverse(const SparseComplex& mass, const SparseComplex& stiff, const QuadraturePlan& plan,
                      const CVector& load, const ApplyOptions& options) {
  auto out = apply_inverse_batch(mass, stiff, std::span(&plan, 1), std::span(&load, 1), options);
  return std::move(out[0][0]);
}

GridFunction apply_inverse(const DiscreteOperator& op, const QuadraturePlan& plan, const CVector& load,
                           const ApplyOptions& options) {
  return {op.mesh, apply_inverse(op.mass, op.stiff, plan, load, options)};
}

}  // namespace fracquad
