#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "fracquad/common.hpp"
#include "fracquad/quadrature.hpp"

namespace fracquad {

using RealField = Eigen::MatrixXd;  // (row, col) = (x2 index, x1 index)

/// -Delta on the periodic square (0, 2pi)^2 sampled on an n x n grid,
/// diagonalized by the 2D discrete Fourier transform.
class PeriodicSpectralOperator {
 public:
  /// n must be a power of two, at least 2.
  explicit PeriodicSpectralOperator(int n);
  ~PeriodicSpectralOperator();
  PeriodicSpectralOperator(const PeriodicSpectralOperator&) = delete;
  PeriodicSpectralOperator& operator=(const PeriodicSpectralOperator&) = delete;

  int n() const { return n_; }
  double spacing() const;
  /// Grid coordinate 2 pi i / n.
  double coordinate(int i) const;

  /// |k|^2 for the integer frequency of each mode (zero frequency at index 0).
  const RealField& symbol() const { return symbol_; }

  /// Unnormalized forward transform; inverse divides by n^2. Both serialize on
  /// an internal lock.
  CMatrix forward(const CMatrix& field) const;
  CMatrix inverse(const CMatrix& spectrum) const;

 private:
  struct Plans;

  int n_;
  RealField symbol_;
  std::unique_ptr<Plans> plans_;
  mutable std::mutex mutex_;
};

/// Per-mode approximation q_k of (lambda_k^alpha + b)^{-1}, either from a
/// quadrature plan, q_k = sum_m w_m / (1 + s_m lambda_k), or from the exact symbol.
class ModeResolvent {
 public:
  static ModeResolvent from_plan(const PeriodicSpectralOperator& op, const QuadraturePlan& plan);
  static ModeResolvent exact(const PeriodicSpectralOperator& op, double alpha, double b);

  const RealField& factors() const { return factors_; }
  double alpha() const { return alpha_; }
  double b() const { return b_; }

 private:
  RealField factors_;
  double alpha_ = 0.0;
  double b_ = 0.0;
};

/// Scalar version of the plan's diagonal action on eigenvalue lambda.
double quadrature_symbol(const QuadraturePlan& plan, double lambda);

struct PhaseFieldState {
  RealField u;
  double t = 0.0;
  int step = 0;
  std::vector<std::pair<double, double>> energy_history;  // (t, E)
};

class SimulationError : public Error {
 public:
  SimulationError(int step, const std::string& what) : Error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

/// One linearized backward-Euler step of
///   u_t = -eps^2 (-Delta)^alpha u + u - u^3,
/// i.e. (eps^2 (-Delta)^alpha + 1/dt) w+ = w/dt + w - w^3, solved mode-wise with
/// a resolvent built for b = 1/(dt eps^2). Throws SimulationError on non-finite
/// values or a non-real result.
PhaseFieldState ac_step(const PhaseFieldState& state, const PeriodicSpectralOperator& op,
                        const ModeResolvent& resolvent, double eps, double dt);

/// (eps^2/2) int |(-Delta)^{alpha/2} u|^2 + int F(u), F(u) = (1 - u^2)^2 / 4, on the grid.
double energy(const RealField& u, const PeriodicSpectralOperator& op, double alpha, double eps);

/// Sum of absolute differences between periodic grid neighbours.
double total_variation(const RealField& u);

/// Uniform values in [-0.05, 0.05) from a seeded 64-bit generator.
RealField random_initial_field(int n, std::uint64_t seed);

struct SimulationConfig {
  int n = 128;
  double alpha = 0.6;  // alpha = 1 uses the exact Laplacian symbol
  double eps = 0.1;
  double dt = 1.0 / 128.0;
  double t_end = 50.0;
  double tol = 1e-10;  // quadrature plan tolerance
  std::uint64_t seed = 1;
  std::vector<double> snapshot_times{0.0, 1.0, 10.0, 50.0};
  double energy_rel_tol = 1e-6;
  double bound = 1.5;
};

struct Snapshot {
  double t = 0.0;
  RealField u;
};

struct SimulationResult {
  std::optional<QuadraturePlan> plan;  // empty for alpha = 1
  std::vector<Snapshot> snapshots;
  std::vector<std::pair<double, double>> energy_history;
  /// Largest per-step relative energy increase (negative when strictly decreasing).
  double max_energy_increase = 0.0;
  RealField final_field;
};

/// Integrates from seeded random data; throws SimulationError when the field
/// leaves [-bound, bound] or the energy grows by more than energy_rel_tol in a step.
SimulationResult run_simulation(const SimulationConfig& cfg);

/// CSV grid, preceded by one "# n=.. t=.. alpha=.. eps=.. seed=.." metadata line.
void write_snapshot(const std::filesystem::path& path, const Snapshot& snap, const SimulationConfig& cfg);
/// Columns: step, t, energy.
void write_energy_history(const std::filesystem::path& path, const SimulationResult& result, double dt);

}  // namespace fracquad
