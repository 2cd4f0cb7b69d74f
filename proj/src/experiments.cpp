#include "fracquad/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include <Eigen/QR>

#include <fmt/format.h>

#include "fracquad/fem.hpp"
#include "fracquad/mesh.hpp"
#include "fracquad/oracle.hpp"
#include "fracquad/spectral_index.hpp"

namespace fracquad {
namespace {

constexpr double kSpatialTau = 3.0 / 20.0;
constexpr int kSpatialTerms = 200;
constexpr double kSweepRefTau = 3.0 / 40.0;
constexpr int kSweepRefTerms = 400;
constexpr double kSweepWindow = 30.0;

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("{}: '{}' is not a number", key, v));
  }
}

long long parse_integer(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(fmt::format("{}: '{}' is not an integer", key, v));
  }
  return out;
}

struct Discretization {
  DiscreteOperator op;
  std::vector<CVector> loads;
};

Discretization discretize(const ExperimentConfig& cfg, int n_div, std::span<const ScalarField> sources) {
  Discretization d;
  const auto mesh = build_mesh(n_div);
  d.op = assemble(mesh, make_coefficients(cfg.op));
  for (const auto& f : sources) d.loads.push_back(load_vector(*mesh, f));
  return d;
}

// Groups plans that share shifts so each group costs one factorization per node.
std::vector<std::vector<CVector>> solve_plans(const DiscreteOperator& op, std::span<const QuadraturePlan> plans,
                                              std::span<const CVector> loads, int threads) {
  std::vector<std::vector<CVector>> out(plans.size());
  std::vector<bool> done(plans.size(), false);
  const ApplyOptions options{threads};
  for (std::size_t i = 0; i < plans.size(); ++i) {
    if (done[i]) continue;
    std::vector<std::size_t> group;
    std::vector<QuadraturePlan> members;
    for (std::size_t j = i; j < plans.size(); ++j) {
      if (!done[j] && plans[j].shares_shifts_with(plans[i])) {
        group.push_back(j);
        members.push_back(plans[j]);
        done[j] = true;
      }
    }
    auto solved = apply_inverse_batch(op.mass, op.stiff, members, loads, options);
    for (std::size_t g = 0; g < group.size(); ++g) out[group[g]] = std::move(solved[g]);
  }
  return out;
}

std::vector<ScalarField> source_fields(const ExperimentConfig& cfg) {
  std::vector<ScalarField> out;
  for (auto s : cfg.sources) out.push_back(make_source(s));
  return out;
}

template <typename Row, typename Writer>
void emit_rows(std::ostream& out, const char* header, std::span<const Row> rows, Writer write) {
  out << header << '\n';
  for (const auto& row : rows) out << write(row) << '\n';
}

template <typename Rows>
void emit_file(const std::filesystem::path& path, Rows rows) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot open {} for writing", path.string()));
  emit_csv(out, rows);
  out.flush();
  if (!out) throw Error(fmt::format("failed writing {}", path.string()));
}

}  // namespace

void ExperimentConfig::validate() const {
  if (sources.empty()) throw ConfigError("source: at least one source is required");
  if (alphas.empty()) throw ConfigError("alpha: at least one value is required");
  for (double a : alphas) {
    if (!(a > 0.0 && a < 1.0)) throw ConfigError(fmt::format("alpha: {} is outside (0, 1)", a));
  }
  if (!(b >= 0.0) || !std::isfinite(b)) throw ConfigError(fmt::format("b: {} must be finite and nonnegative", b));
  if (mesh.empty()) throw ConfigError("mesh: at least one entry is required");
  for (int n : mesh) {
    if (n < 2) throw ConfigError(fmt::format("mesh: {} has no interior nodes", n));
    if (ref_mesh <= n || ref_mesh % n != 0 || !is_power_of_two(ref_mesh / n)) {
      throw ConfigError(fmt::format("ref-mesh: {} is not a dyadic refinement of mesh entry {}", ref_mesh, n));
    }
  }
  if (tau && !(*tau > 0.0)) throw ConfigError(fmt::format("tau: {} must be positive", *tau));
  if (big_m && *big_m < 0) throw ConfigError("big-m: must be nonnegative");
  if (big_n && *big_n < 0) throw ConfigError("big-n: must be nonnegative");
  if (tol && !(*tol > 0.0 && *tol < 1.0)) throw ConfigError(fmt::format("tol: {} is outside (0, 1)", *tol));
  if (tol && (tau || big_m || big_n)) throw ConfigError("tol: cannot be combined with tau/big-m/big-n");
  if (beta && !(*beta >= 0.0)) throw ConfigError("beta: must be nonnegative");
  for (double v : b_values) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(fmt::format("b-values: {} must be positive", v));
  }
  for (double v : sweep_taus) {
    if (!(v > 0.0)) throw ConfigError(fmt::format("sweep-taus: {} must be positive", v));
  }
  if (threads < 1) throw ConfigError("threads: must be at least 1");
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected key=value", number));
    std::string key = trim(std::string_view(body).substr(0, eq));
    while (!key.empty() && key.front() == '-') key.erase(key.begin());
    if (key.empty()) throw ConfigError(fmt::format("line {}: empty key", number));
    out[key] = trim(std::string_view(body).substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config file {}", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

void apply_config(ExperimentConfig& cfg, const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) {
    try {
      if (key == "operator") {
        cfg.op = parse_operator(value);
      } else if (key == "source") {
        cfg.sources.clear();
        for (const auto& s : split_list(value)) cfg.sources.push_back(parse_source(s));
      } else if (key == "alpha") {
        cfg.alphas.clear();
        for (const auto& s : split_list(value)) cfg.alphas.push_back(parse_double(key, s));
      } else if (key == "b") {
        cfg.b = parse_double(key, value);
      } else if (key == "mesh") {
        cfg.mesh.clear();
        for (const auto& s : split_list(value)) cfg.mesh.push_back(static_cast<int>(parse_integer(key, s)));
      } else if (key == "ref-mesh") {
        cfg.ref_mesh = static_cast<int>(parse_integer(key, value));
      } else if (key == "tau") {
        cfg.tau = parse_double(key, value);
      } else if (key == "big-m") {
        cfg.big_m = static_cast<int>(parse_integer(key, value));
      } else if (key == "big-n") {
        cfg.big_n = static_cast<int>(parse_integer(key, value));
      } else if (key == "tol") {
        cfg.tol = parse_double(key, value);
      } else if (key == "beta") {
        cfg.beta = parse_double(key, value);
      } else if (key == "b-values") {
        cfg.b_values.clear();
        for (const auto& s : split_list(value)) cfg.b_values.push_back(parse_double(key, s));
      } else if (key == "sweep-taus") {
        cfg.sweep_taus.clear();
        for (const auto& s : split_list(value)) cfg.sweep_taus.push_back(parse_double(key, s));
      } else if (key == "out") {
        cfg.out = value;
      } else if (key == "threads") {
        cfg.threads = static_cast<int>(parse_integer(key, value));
      } else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(parse_integer(key, value));
      } else {
        throw ConfigError(fmt::format("unknown key '{}'", key));
      }
    } catch (const std::invalid_argument& e) {
      throw ConfigError(fmt::format("{}: {}", key, e.what()));
    }
  }
}

double theoretical_order(double alpha, SourcePreset source) {
  return std::min(2.0 * alpha + source_smoothness(source), 2.0);
}

double resolve_beta(const ExperimentConfig& cfg, int n_div) {
  if (cfg.beta) return *cfg.beta;
  if (cfg.op == OperatorPreset::a1) return 0.0;
  const DiscreteOperator op = assemble(build_mesh(n_div), make_coefficients(cfg.op));
  return estimate_beta(op).beta;
}

QuadraturePlan spatial_plan(const ExperimentConfig& cfg, double alpha, double b, double beta) {
  if (cfg.tol) return plan_from_tolerance(alpha, b, beta, *cfg.tol);
  return plan_explicit(alpha, b, beta, cfg.tau.value_or(kSpatialTau), cfg.big_m.value_or(kSpatialTerms),
                       cfg.big_n.value_or(kSpatialTerms));
}

std::vector<double> spatial_errors(const ExperimentConfig& cfg, double alpha, const ScalarField& f) {
  cfg.validate();
  const double beta = cfg.tol ? resolve_beta(cfg, std::min(cfg.ref_mesh, 64)) : cfg.beta.value_or(0.0);
  const QuadraturePlan plan = spatial_plan(cfg, alpha, cfg.b, beta);
  const std::vector<ScalarField> fields{f};
  const Discretization ref = discretize(cfg, cfg.ref_mesh, fields);
  const GridFunction ref_u{ref.op.mesh, solve_plans(ref.op, std::span(&plan, 1), ref.loads, cfg.threads)[0][0]};
  std::vector<double> out;
  for (int n : cfg.mesh) {
    const Discretization d = discretize(cfg, n, fields);
    const GridFunction u{d.op.mesh, solve_plans(d.op, std::span(&plan, 1), d.loads, cfg.threads)[0][0]};
    out.push_back(l2_error(u, ref_u, ref.op.mass));
  }
  return out;
}

std::vector<ConvergenceRow> run_spatial_convergence(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::vector<ScalarField> fields = source_fields(cfg);
  const double beta = cfg.tol ? resolve_beta(cfg, std::min(cfg.ref_mesh, 64)) : cfg.beta.value_or(0.0);

  const Discretization ref = discretize(cfg, cfg.ref_mesh, fields);
  std::vector<Discretization> ladder;
  for (int n : cfg.mesh) ladder.push_back(discretize(cfg, n, fields));

  std::vector<ConvergenceRow> rows;
  for (double alpha : cfg.alphas) {
    const QuadraturePlan plan = spatial_plan(cfg, alpha, cfg.b, beta);
    const auto ref_u = solve_plans(ref.op, std::span(&plan, 1), ref.loads, cfg.threads)[0];
    // errors[source][mesh]
    std::vector<std::vector<double>> errors(fields.size());
    for (const auto& d : ladder) {
      const auto u = solve_plans(d.op, std::span(&plan, 1), d.loads, cfg.threads)[0];
      for (std::size_t s = 0; s < fields.size(); ++s) {
        errors[s].push_back(l2_error({d.op.mesh, u[s]}, {ref.op.mesh, ref_u[s]}, ref.op.mass));
      }
    }
    for (std::size_t s = 0; s < fields.size(); ++s) {
      for (std::size_t k = 0; k < cfg.mesh.size(); ++k) {
        ConvergenceRow row;
        row.op = cfg.op;
        row.source = cfg.sources[s];
        row.alpha = alpha;
        row.n_div = cfg.mesh[k];
        row.l2_error = errors[s][k];
        row.theoretical_order = theoretical_order(alpha, cfg.sources[s]);
        if (k > 0) {
          row.observed_order = std::log2(errors[s][k - 1] / errors[s][k]) /
                               std::log2(static_cast<double>(cfg.mesh[k]) / cfg.mesh[k - 1]);
        }
        rows.push_back(row);
      }
    }
  }
  return rows;
}

std::vector<double> default_sweep_taus(double kappa) {
  constexpr int count = 15;
  const double lo = std::log(1e3) / (2.0 * std::numbers::pi * kappa);
  const double hi = std::log(1e11) / (2.0 * std::numbers::pi * kappa);
  std::vector<double> taus;
  for (int i = 0; i < count; ++i) {
    const double inv_tau = lo + (hi - lo) * i / (count - 1);
    taus.push_back(1.0 / inv_tau);
  }
  return taus;
}

std::vector<QuadSweepRow> run_quadrature_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const int n_div = cfg.mesh.front();
  const std::vector<ScalarField> fields = source_fields(cfg);
  const Discretization d = discretize(cfg, n_div, fields);
  double beta = 0.0;
  if (cfg.beta) {
    beta = *cfg.beta;
  } else if (cfg.op == OperatorPreset::a3) {
    beta = kA3ReferenceBeta;
  } else {
    beta = resolve_beta(cfg, n_div);
  }

  std::vector<QuadSweepRow> rows;
  for (double alpha : cfg.alphas) {
    const double kappa = pole_constants(alpha, beta).min();
    const std::vector<double> taus = cfg.sweep_taus.empty() ? default_sweep_taus(kappa) : cfg.sweep_taus;
    std::vector<QuadraturePlan> plans;
    plans.push_back(plan_explicit(alpha, cfg.b, beta, kSweepRefTau, kSweepRefTerms, kSweepRefTerms));
    for (double tau : taus) {
      const int terms = static_cast<int>(std::lround(kSweepWindow / tau));
      plans.push_back(plan_explicit(alpha, cfg.b, beta, tau, terms, terms));
    }
    const auto u = solve_plans(d.op, plans, d.loads, cfg.threads);
    for (std::size_t s = 0; s < fields.size(); ++s) {
      for (std::size_t p = 1; p < plans.size(); ++p) {
        QuadSweepRow row;
        row.op = cfg.op;
        row.source = cfg.sources[s];
        row.alpha = alpha;
        row.tau = plans[p].tau();
        row.m = plans[p].m_neg();
        row.n = plans[p].n_pos();
        row.l2_error = l2_norm(d.op.mass, u[p][s] - u[0][s]);
        row.model = std::exp(-2.0 * std::numbers::pi * kappa / row.tau);
        rows.push_back(row);
      }
    }
  }
  return rows;
}

std::vector<BSweepRow> run_b_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<double> bs = cfg.b_values;
  if (bs.empty()) {
    for (int k = -30; k <= 30; ++k) bs.push_back(std::ldexp(1.0, k));
  }
  const int n_div = cfg.mesh.front();
  const std::vector<ScalarField> fields = source_fields(cfg);
  const double beta = cfg.tol ? resolve_beta(cfg, std::min(cfg.ref_mesh, 64)) : cfg.beta.value_or(0.0);
  const Discretization coarse = discretize(cfg, n_div, fields);
  const Discretization ref = discretize(cfg, cfg.ref_mesh, fields);
  const double h = 1.0 / n_div;

  std::vector<BSweepRow> rows;
  for (double alpha : cfg.alphas) {
    std::vector<QuadraturePlan> plans;
    for (double b : bs) plans.push_back(spatial_plan(cfg, alpha, b, beta));
    const auto uc = solve_plans(coarse.op, plans, coarse.loads, cfg.threads);
    const auto ur = solve_plans(ref.op, plans, ref.loads, cfg.threads);
    const double threshold = std::pow(h, -2.0 * alpha);
    for (std::size_t s = 0; s < fields.size(); ++s) {
      for (std::size_t i = 0; i < bs.size(); ++i) {
        BSweepRow row;
        row.op = cfg.op;
        row.source = cfg.sources[s];
        row.alpha = alpha;
        row.b = bs[i];
        row.n_div = n_div;
        row.ref_n_div = cfg.ref_mesh;
        row.l2_error = l2_error({coarse.op.mesh, uc[i][s]}, {ref.op.mesh, ur[i][s]}, ref.op.mass);
        if (cfg.sources[s] == SourcePreset::f1) {
          row.predicted_slope = bs[i] >= 1.0 ? -1.0 : 0.0;
        } else {
          row.predicted_slope = bs[i] > threshold ? -1.0 : 0.0;
        }
        rows.push_back(row);
      }
    }
  }
  return rows;
}

CMatrix dirichlet_laplacian_1d(int n) {
  if (n < 1) throw std::invalid_argument("laplacian size must be positive");
  const double inv_h2 = (n + 1.0) * (n + 1.0);
  CMatrix a = CMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    a(i, i) = 2.0 * inv_h2;
    if (i > 0) a(i, i - 1) = a(i - 1, i) = -inv_h2;
  }
  return a;
}

CMatrix random_hpd_matrix(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> e(std::log(0.1), std::log(100.0));
  CMatrix z(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) z(i, j) = Complex(g(rng), g(rng));
  const CMatrix q = Eigen::HouseholderQR<CMatrix>(z).householderQ();
  Eigen::VectorXd lambda(n);
  for (int i = 0; i < n; ++i) lambda[i] = std::exp(e(rng));
  const CMatrix a = q * lambda.cast<Complex>().asDiagonal() * q.adjoint();
  return (a + a.adjoint()) / 2.0;
}

std::vector<OracleCheckRow> run_oracle_check(const OracleCheckConfig& cfg) {
  for (double a : cfg.alphas) {
    if (!(a > 0.0 && a < 1.0)) throw ConfigError(fmt::format("alpha: {} is outside (0, 1)", a));
  }
  for (double t : cfg.shifts) {
    if (!(t >= 0.0)) throw ConfigError(fmt::format("b: {} must be nonnegative", t));
  }
  if (cfg.max_size < 1 || cfg.random_cases < 0 || cfg.laplacian_size < 1) {
    throw ConfigError("oracle-check: sizes must be positive");
  }
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> g;
  std::uniform_int_distribution<int> size(1, cfg.max_size);

  std::vector<std::pair<std::string, CMatrix>> cases;
  cases.emplace_back("laplacian", dirichlet_laplacian_1d(cfg.laplacian_size));
  for (int c = 0; c < cfg.random_cases; ++c) {
    const int n = size(rng);
    cases.emplace_back(fmt::format("hpd-{}", c), random_hpd_matrix(rng, n));
  }

  const auto rel = [](const CVector& a, const CVector& b) { return (a - b).norm() / b.norm(); };
  std::vector<OracleCheckRow> rows;
  for (const auto& [name, b] : cases) {
    const int n = static_cast<int>(b.rows());
    CVector f(n);
    if (name == "laplacian") {
      // First eigenvector of the Laplacian.
      for (int i = 0; i < n; ++i) f[i] = std::sin(std::numbers::pi * (i + 1) / (n + 1));
    } else {
      for (int i = 0; i < n; ++i) f[i] = Complex(g(rng), g(rng));
    }
    const DenseOperator dense(b);
    const SparseComplex mass = SparseComplex::identity(n);
    const SparseComplex stiff = SparseComplex::from_dense(b);
    for (double alpha : cfg.alphas) {
      for (double t : cfg.shifts) {
        const QuadraturePlan plan = plan_explicit(alpha, t, 0.0, cfg.tau, cfg.big_m, cfg.big_n);
        const CVector eig = eigen_fractional_apply(dense, alpha, t, f);
        OracleCheckRow row;
        row.matrix = name;
        row.n = n;
        row.alpha = alpha;
        row.t = t;
        row.quad_vs_eigen = rel(apply_inverse(mass, stiff, plan, f), eig);
        row.eigen_vs_integral = rel(adaptive_integral_apply(dense, alpha, t, f), eig);
        rows.push_back(row);
      }
    }
  }
  return rows;
}

double fit_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("slope fit needs two or more paired points");
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("slope fit needs distinct abscissae");
  return sxy / sxx;
}

void emit_csv(std::ostream& out, std::span<const ConvergenceRow> rows) {
  emit_rows(out, "experiment,operator,source,alpha,n_div,l2_error,observed_order,theoretical_order", rows,
            [](const ConvergenceRow& r) {
              return fmt::format("convergence,{},{},{:.17g},{},{:.17g},{},{:.17g}", to_string(r.op),
                                 to_string(r.source), r.alpha, r.n_div, r.l2_error,
                                 r.observed_order ? fmt::format("{:.17g}", *r.observed_order) : std::string(),
                                 r.theoretical_order);
            });
}

void emit_csv(std::ostream& out, std::span<const QuadSweepRow> rows) {
  emit_rows(out, "experiment,operator,source,alpha,tau,m,n,l2_error,model", rows, [](const QuadSweepRow& r) {
    return fmt::format("quad-sweep,{},{},{:.17g},{:.17g},{},{},{:.17g},{:.17g}", to_string(r.op), to_string(r.source),
                       r.alpha, r.tau, r.m, r.n, r.l2_error, r.model);
  });
}

void emit_csv(std::ostream& out, std::span<const BSweepRow> rows) {
  emit_rows(out, "experiment,operator,source,alpha,b,n_div,ref_n_div,l2_error,predicted_slope", rows,
            [](const BSweepRow& r) {
              return fmt::format("b-sweep,{},{},{:.17g},{:.17g},{},{},{:.17g},{:.17g}", to_string(r.op),
                                 to_string(r.source), r.alpha, r.b, r.n_div, r.ref_n_div, r.l2_error,
                                 r.predicted_slope);
            });
}

void emit_csv(std::ostream& out, std::span<const OracleCheckRow> rows) {
  emit_rows(out, "experiment,matrix,n,alpha,t,quad_vs_eigen,eigen_vs_integral", rows, [](const OracleCheckRow& r) {
    return fmt::format("oracle-check,{},{},{:.17g},{:.17g},{:.17g},{:.17g}", r.matrix, r.n, r.alpha, r.t,
                       r.quad_vs_eigen, r.eigen_vs_integral);
  });
}

void emit_csv(const std::filesystem::path& path, std::span<const ConvergenceRow> rows) { emit_file(path, rows); }
void emit_csv(const std::filesystem::path& path, std::span<const QuadSweepRow> rows) { emit_file(path, rows); }
void emit_csv(const std::filesystem::path& path, std::span<const BSweepRow> rows) { emit_file(path, rows); }
void emit_csv(const std::filesystem::path& path, std::span<const OracleCheckRow> rows) { emit_file(path, rows); }

}  // namespace fracquad
