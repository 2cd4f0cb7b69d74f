#include "fracquad/allen_cahn.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <fftw3.h>
#include <fmt/format.h>
#include <fmt/os.h>

namespace fracquad {

struct PeriodicSpectralOperator::Plans {
  fftw_complex* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  explicit Plans(int n) {
    const std::size_t count = static_cast<std::size_t>(n) * n;
    in = fftw_alloc_complex(count);
    out = fftw_alloc_complex(count);
    if (in == nullptr || out == nullptr) throw std::bad_alloc();
    forward = fftw_plan_dft_2d(n, n, in, out, FFTW_FORWARD, FFTW_ESTIMATE);
    backward = fftw_plan_dft_2d(n, n, in, out, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (forward == nullptr || backward == nullptr) throw Error("FFTW planning failed");
  }
  ~Plans() {
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    fftw_free(in);
    fftw_free(out);
  }
  Plans(const Plans&) = delete;
  Plans& operator=(const Plans&) = delete;
};

PeriodicSpectralOperator::PeriodicSpectralOperator(int n) : n_(n) {
  if (n < 2 || (n & (n - 1)) != 0) throw std::invalid_argument(fmt::format("grid size {} is not a power of two >= 2", n));
  symbol_.resize(n, n);
  for (int r = 0; r < n; ++r) {
    const int kr = r < n / 2 ? r : r - n;
    for (int c = 0; c < n; ++c) {
      const int kc = c < n / 2 ? c : c - n;
      symbol_(r, c) = static_cast<double>(kr * kr + kc * kc);
    }
  }
  plans_ = std::make_unique<Plans>(n);
}

PeriodicSpectralOperator::~PeriodicSpectralOperator() = default;

double PeriodicSpectralOperator::spacing() const { return 2.0 * std::numbers::pi / n_; }
double PeriodicSpectralOperator::coordinate(int i) const { return spacing() * i; }

CMatrix PeriodicSpectralOperator::forward(const CMatrix& field) const {
  if (field.rows() != n_ || field.cols() != n_) throw DimensionError("field does not match the grid");
  std::lock_guard lock(mutex_);
  std::copy(field.data(), field.data() + field.size(), reinterpret_cast<Complex*>(plans_->in));
  fftw_execute(plans_->forward);
  CMatrix out(n_, n_);
  std::copy(reinterpret_cast<Complex*>(plans_->out), reinterpret_cast<Complex*>(plans_->out) + out.size(), out.data());
  return out;
}

CMatrix PeriodicSpectralOperator::inverse(const CMatrix& spectrum) const {
  if (spectrum.rows() != n_ || spectrum.cols() != n_) throw DimensionError("spectrum does not match the grid");
  std::lock_guard lock(mutex_);
  std::copy(spectrum.data(), spectrum.data() + spectrum.size(), reinterpret_cast<Complex*>(plans_->in));
  fftw_execute(plans_->backward);
  CMatrix out(n_, n_);
  std::copy(reinterpret_cast<Complex*>(plans_->out), reinterpret_cast<Complex*>(plans_->out) + out.size(), out.data());
  return out / static_cast<double>(n_) / static_cast<double>(n_);
}

double quadrature_symbol(const QuadraturePlan& plan, double lambda) {
  double q = 0.0;
  for (const auto& node : plan.nodes()) {
    if (node.weight == 0.0 || !std::isfinite(node.shift)) continue;
    q += node.weight / (1.0 + node.shift * lambda);
  }
  return q;
}

ModeResolvent ModeResolvent::from_plan(const PeriodicSpectralOperator& op, const QuadraturePlan& plan) {
  ModeResolvent r;
  r.alpha_ = plan.alpha();
  r.b_ = plan.b();
  r.factors_ = op.symbol().unaryExpr([&](double lambda) { return quadrature_symbol(plan, lambda); });
  return r;
}

ModeResolvent ModeResolvent::exact(const PeriodicSpectralOperator& op, double alpha, double b) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
  ModeResolvent r;
  r.alpha_ = alpha;
  r.b_ = b;
  r.factors_ = op.symbol().unaryExpr([&](double lambda) { return 1.0 / (std::pow(lambda, alpha) + b); });
  return r;
}

PhaseFieldState ac_step(const PhaseFieldState& state, const PeriodicSpectralOperator& op,
                        const ModeResolvent& resolvent, double eps, double dt) {
  const RealField& w = state.u;
  const RealField rhs = w / dt + w - w.cwiseProduct(w).cwiseProduct(w);
  CMatrix spec = op.forward(rhs.cast<Complex>());
  spec = spec.cwiseProduct(resolvent.factors().cast<Complex>()) / (eps * eps);
  const CMatrix next = op.inverse(spec);

  PhaseFieldState out;
  out.u = next.real();
  out.t = state.t + dt;
  out.step = state.step + 1;
  out.energy_history = state.energy_history;
  if (!out.u.allFinite()) {
    throw SimulationError(out.step, fmt::format("non-finite field at step {}", out.step));
  }
  const double residue = next.imag().norm();
  if (residue > 1e-12 * std::max(out.u.norm(), 1e-300) && residue > 0.0) {
    throw SimulationError(out.step, fmt::format("imaginary residue {:.3g} at step {}", residue, out.step));
  }
  return out;
}

double energy(const RealField& u, const PeriodicSpectralOperator& op, double alpha, double eps) {
  const int n = op.n();
  const double h = op.spacing();
  const CMatrix spec = op.forward(u.cast<Complex>());
  double grad = 0.0;
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < n; ++r) {
      const double lambda = op.symbol()(r, c);
      if (lambda == 0.0) continue;
      grad += std::pow(lambda, alpha) * std::norm(spec(r, c));
    }
  }
  // Parseval: h^2 sum |u|^2 = h^2 / n^2 sum |u_hat|^2.
  grad *= h * h / (static_cast<double>(n) * n);
  const double potential = u.unaryExpr([](double v) { return 0.25 * (1.0 - v * v) * (1.0 - v * v); }).sum() * h * h;
  return 0.5 * eps * eps * grad + potential;
}

double total_variation(const RealField& u) {
  const Eigen::Index rows = u.rows();
  const Eigen::Index cols = u.cols();
  double tv = 0.0;
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      tv += std::abs(u((r + 1) % rows, c) - u(r, c)) + std::abs(u(r, (c + 1) % cols) - u(r, c));
    }
  }
  return tv;
}

RealField random_initial_field(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  RealField u(n, n);
  // Row-major fill so the layout does not depend on the storage order.
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const double uniform = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      u(r, c) = 0.1 * uniform - 0.05;
    }
  }
  return u;
}

SimulationResult run_simulation(const SimulationConfig& cfg) {
  if (!(cfg.dt > 0.0) || !(cfg.eps > 0.0) || !(cfg.t_end >= 0.0)) throw std::invalid_argument("dt, eps must be positive and t_end nonnegative");
  const PeriodicSpectralOperator op(cfg.n);
  const double b = 1.0 / (cfg.dt * cfg.eps * cfg.eps);

  SimulationResult result;
  std::optional<ModeResolvent> resolvent;
  if (cfg.alpha == 1.0) {
    resolvent = ModeResolvent::exact(op, 1.0, b);
  } else {
    result.plan = plan_from_tolerance(cfg.alpha, b, 0.0, cfg.tol);
    resolvent = ModeResolvent::from_plan(op, *result.plan);
  }

  const int steps = static_cast<int>(std::llround(cfg.t_end / cfg.dt));
  auto is_snapshot = [&](int step) {
    for (double ts : cfg.snapshot_times) {
      if (std::llround(ts / cfg.dt) == step) return true;
    }
    return false;
  };

  PhaseFieldState state;
  state.u = random_initial_field(cfg.n, cfg.seed);
  double e_prev = energy(state.u, op, cfg.alpha, cfg.eps);
  result.energy_history.emplace_back(0.0, e_prev);
  result.max_energy_increase = -std::numeric_limits<double>::infinity();
  if (is_snapshot(0)) result.snapshots.push_back({0.0, state.u});

  for (int k = 1; k <= steps; ++k) {
    state = ac_step(state, op, *resolvent, cfg.eps, cfg.dt);
    state.t = k * cfg.dt;
    const double bound = state.u.cwiseAbs().maxCoeff();
    if (bound > cfg.bound) {
      throw SimulationError(k, fmt::format("field magnitude {:.6g} exceeds {} at step {}", bound, cfg.bound, k));
    }
    const double e = energy(state.u, op, cfg.alpha, cfg.eps);
    const double increase = (e - e_prev) / std::abs(e_prev);
    result.max_energy_increase = std::max(result.max_energy_increase, increase);
    if (increase > cfg.energy_rel_tol) {
      throw SimulationError(k, fmt::format("energy rose by {:.3g} (relative) at step {}", increase, k));
    }
    e_prev = e;
    result.energy_history.emplace_back(state.t, e);
    if (is_snapshot(k)) result.snapshots.push_back({state.t, state.u});
  }
  result.final_field = std::move(state.u);
  return result;
}

void write_snapshot(const std::filesystem::path& path, const Snapshot& snap, const SimulationConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot open {} for writing", path.string()));
  out << fmt::format("# n={} t={:.17g} alpha={:.17g} eps={:.17g} seed={}\n", cfg.n, snap.t, cfg.alpha, cfg.eps, cfg.seed);
  for (Eigen::Index r = 0; r < snap.u.rows(); ++r) {
    for (Eigen::Index c = 0; c < snap.u.cols(); ++c) {
      out << (c ? "," : "") << fmt::format("{:.17g}", snap.u(r, c));
    }
    out << '\n';
  }
  if (!out) throw Error(fmt::format("failed writing {}", path.string()));
}

void write_energy_history(const std::filesystem::path& path, const SimulationResult& result, double dt) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot open {} for writing", path.string()));
  out << "step,t,energy\n";
  for (const auto& [t, e] : result.energy_history) {
    out << fmt::format("{},{:.17g},{:.17g}\n", std::llround(t / dt), t, e);
  }
  if (!out) throw Error(fmt::format("failed writing {}", path.string()));
}

}  // namespace fracquad
