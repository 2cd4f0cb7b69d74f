#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fracquad/coefficients.hpp"
#include "fracquad/quadrature.hpp"

namespace fracquad {

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct ExperimentConfig {
  OperatorPreset op = OperatorPreset::a1;
  std::vector<SourcePreset> sources{SourcePreset::f1};
  std::vector<double> alphas{0.5};
  double b = 1.0;
  std::vector<int> mesh{8, 16, 32, 64};
  int ref_mesh = 256;

  // Quadrature: explicit tau/M/N, or a tolerance for plan_from_tolerance.
  std::optional<double> tau;
  std::optional<int> big_m;
  std::optional<int> big_n;
  std::optional<double> tol;
  /// Operator index used for planning and the model curves; resolved per
  /// preset when absent (0 for A1, estimated otherwise).
  std::optional<double> beta;

  /// b values of the b-sweep; empty means 2^k for k = -30..30.
  std::vector<double> b_values;
  /// tau values of the quadrature sweep; empty means an automatic window.
  std::vector<double> sweep_taus;

  std::filesystem::path out;
  int threads = 1;
  std::uint64_t seed = 1;

  /// Throws ConfigError with the offending field.
  void validate() const;
};

/// Parses key=value lines (keys as the CLI flags without dashes, '#' starts a
/// comment, lists comma separated) into a flat map. Throws ConfigError with the line number.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);
/// Applies known keys to `cfg`; unknown keys raise ConfigError.
void apply_config(ExperimentConfig& cfg, const std::map<std::string, std::string>& values);

/// Theoretical spatial order min(2 alpha + delta, 2) with delta from the source.
double theoretical_order(double alpha, SourcePreset source);

struct ConvergenceRow {
  OperatorPreset op = OperatorPreset::a1;
  SourcePreset source = SourcePreset::f1;
  double alpha = 0.0;
  int n_div = 0;
  double l2_error = 0.0;
  std::optional<double> observed_order;  // log2(E(2h) / E(h)), from the second ladder entry on
  double theoretical_order = 0.0;
};

struct QuadSweepRow {
  OperatorPreset op = OperatorPreset::a1;
  SourcePreset source = SourcePreset::f1;
  double alpha = 0.0;
  double tau = 0.0;
  int m = 0;
  int n = 0;
  double l2_error = 0.0;
  double model = 0.0;  // exp(-2 pi min(kappa) / tau)
};

struct BSweepRow {
  OperatorPreset op = OperatorPreset::a1;
  SourcePreset source = SourcePreset::f1;
  double alpha = 0.0;
  double b = 0.0;
  int n_div = 0;
  int ref_n_div = 0;
  double l2_error = 0.0;
  double predicted_slope = 0.0;  // local slope of log error vs log b
};

/// Plan used for spatial studies: explicit settings from the config, the
/// tolerance planner, or tau = 3/20 with M = N = 200.
QuadraturePlan spatial_plan(const ExperimentConfig& cfg, double alpha, double b, double beta);

/// L2 errors of the ladder solutions against the reference-mesh solution for
/// an arbitrary source, in ladder order.
std::vector<double> spatial_errors(const ExperimentConfig& cfg, double alpha, const ScalarField& f);

/// Rows ordered by alpha, then source, then mesh (config order).
std::vector<ConvergenceRow> run_spatial_convergence(const ExperimentConfig& cfg);

/// Error of U(tau, M = N = round(30/tau)) against the tau = 3/40, M = N = 400
/// solution on the first configured mesh.
std::vector<QuadSweepRow> run_quadrature_sweep(const ExperimentConfig& cfg);

/// Spatial error per b on mesh.front() against ref_mesh, both solved at the same b.
std::vector<BSweepRow> run_b_sweep(const ExperimentConfig& cfg);

/// tau values with model errors spread evenly in log between 1e-3 and 1e-11.
std::vector<double> default_sweep_taus(double kappa);

/// Operator index resolution for a preset: cfg.beta if set, 0 for A1,
/// otherwise estimate_beta on the given mesh.
double resolve_beta(const ExperimentConfig& cfg, int n_div);
/// Nominal index of A3 used for its quadrature sweep model.
inline constexpr double kA3ReferenceBeta = 1.778;

struct OracleCheckConfig {
  std::vector<double> alphas{0.25, 0.5, 0.75};
  std::vector<double> shifts{0.0, 1.0, 10.0};  // t = b
  double tau = 3.0 / 20.0;
  int big_m = 200;
  int big_n = 200;
  int laplacian_size = 50;
  int random_cases = 50;
  int max_size = 50;
  std::uint64_t seed = 1;
};

struct OracleCheckRow {
  std::string matrix;  // "laplacian" or "hpd-<case>"
  int n = 0;
  double alpha = 0.0;
  double t = 0.0;
  double quad_vs_eigen = 0.0;      // relative L2 difference
  double eigen_vs_integral = 0.0;  // relative L2 difference
};

/// Scaled 1D Dirichlet finite-difference Laplacian with n interior points.
CMatrix dirichlet_laplacian_1d(int n);
/// Hermitian positive definite Q diag(lambda) Q* with log-uniform spectrum in [0.1, 100].
CMatrix random_hpd_matrix(std::mt19937_64& rng, int n);

/// Quadrature (identity mass, stiffness B) and both dense oracles on the
/// Laplacian and seeded random HPD matrices of size 1..max_size.
std::vector<OracleCheckRow> run_oracle_check(const OracleCheckConfig& cfg);

/// Least-squares slope of y against x.
double fit_slope(std::span<const double> x, std::span<const double> y);

void emit_csv(std::ostream& out, std::span<const ConvergenceRow> rows);
void emit_csv(std::ostream& out, std::span<const QuadSweepRow> rows);
void emit_csv(std::ostream& out, std::span<const BSweepRow> rows);
void emit_csv(std::ostream& out, std::span<const OracleCheckRow> rows);
/// Writes the file; I/O failures raise Error naming the path.
void emit_csv(const std::filesystem::path& path, std::span<const ConvergenceRow> rows);
void emit_csv(const std::filesystem::path& path, std::span<const QuadSweepRow> rows);
void emit_csv(const std::filesystem::path& path, std::span<const BSweepRow> rows);
void emit_csv(const std::filesystem::path& path, std::span<const OracleCheckRow> rows);

}  // namespace fracquad
