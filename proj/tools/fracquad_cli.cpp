// Command-line front end for the fractional solver experiments.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "fracquad/allen_cahn.hpp"
#include "fracquad/experiments.hpp"

namespace fq = fracquad;

namespace {

// Flags mirrored by config file keys. Values stay strings so that the config
// parser handles both sources identically.
const std::vector<std::string> kSharedKeys{"operator", "source", "alpha", "b",   "mesh",   "ref-mesh",
                                           "tau",      "big-m",  "big-n", "tol", "beta",   "b-values",
                                           "sweep-taus", "out",  "threads", "seed"};

struct Flags {
  std::map<std::string, std::string> values;
  std::string config;
};

void add_shared_flags(CLI::App* cmd, Flags& flags) {
  cmd->add_option("--config", flags.config, "key=value file; flags override its entries")->check(CLI::ExistingFile);
  for (const auto& key : kSharedKeys) {
    cmd->add_option_function<std::string>(
        "--" + key, [&flags, key](const std::string& v) { flags.values[key] = v; }, "see README");
  }
}

fq::ExperimentConfig build_config(const Flags& flags) {
  fq::ExperimentConfig cfg;
  if (!flags.config.empty()) fq::apply_config(cfg, fq::read_config_file(flags.config));
  fq::apply_config(cfg, flags.values);
  cfg.validate();
  return cfg;
}

template <typename Row>
void write_rows(const fq::ExperimentConfig& cfg, const std::vector<Row>& rows) {
  if (cfg.out.empty()) {
    fq::emit_csv(std::cout, std::span<const Row>(rows));
  } else {
    fq::emit_csv(cfg.out, std::span<const Row>(rows));
    fmt::print(stderr, "wrote {} rows to {}\n", rows.size(), cfg.out.string());
  }
}

int run_oracle_check(const Flags& flags, int cases) {
  fq::OracleCheckConfig cfg;
  std::map<std::string, std::string> values;
  if (!flags.config.empty()) values = fq::read_config_file(flags.config);
  for (const auto& [k, v] : flags.values) values[k] = v;
  std::filesystem::path out;
  for (const auto& [key, value] : values) {
    if (key == "alpha") {
      fq::ExperimentConfig scratch;
      fq::apply_config(scratch, {{"alpha", value}});
      cfg.alphas = scratch.alphas;
    } else if (key == "b") {
      // Shifts may include 0, which the b-values key rejects; parse element-wise.
      cfg.shifts.clear();
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) {
        fq::ExperimentConfig scratch;
        fq::apply_config(scratch, {{"b", item}});
        cfg.shifts.push_back(scratch.b);
      }
    } else if (key == "tau" || key == "big-m" || key == "big-n" || key == "seed") {
      fq::ExperimentConfig scratch;
      fq::apply_config(scratch, {{key, value}});
      if (key == "tau") cfg.tau = *scratch.tau;
      if (key == "big-m") cfg.big_m = *scratch.big_m;
      if (key == "big-n") cfg.big_n = *scratch.big_n;
      if (key == "seed") cfg.seed = scratch.seed;
    } else if (key == "out") {
      out = value;
    } else if (key != "threads") {
      throw fq::ConfigError(fmt::format("oracle-check does not use '{}'", key));
    }
  }
  cfg.random_cases = cases;
  const auto rows = fq::run_oracle_check(cfg);
  if (out.empty()) {
    fq::emit_csv(std::cout, std::span<const fq::OracleCheckRow>(rows));
  } else {
    fq::emit_csv(out, std::span<const fq::OracleCheckRow>(rows));
  }
  double worst_quad = 0.0, worst_cross = 0.0;
  for (const auto& r : rows) {
    worst_quad = std::max(worst_quad, r.quad_vs_eigen);
    worst_cross = std::max(worst_cross, r.eigen_vs_integral);
  }
  fmt::print(stderr, "max quadrature vs eigen {:.3e}, max eigen vs integral {:.3e}\n", worst_quad, worst_cross);
  return 0;
}

struct AllenCahnFlags {
  fq::SimulationConfig sim;
  std::optional<std::string> alpha;
  std::string out = "allen_cahn_out";
};

int run_allen_cahn(const AllenCahnFlags& flags) {
  fq::SimulationConfig cfg = flags.sim;
  if (flags.alpha) {
    cfg.alpha = std::stod(*flags.alpha);
    if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) throw fq::ConfigError("alpha: must lie in (0, 1]");
  }
  const auto result = fq::run_simulation(cfg);
  const std::filesystem::path dir = flags.out;
  std::filesystem::create_directories(dir);
  for (const auto& snap : result.snapshots) {
    fq::write_snapshot(dir / fmt::format("snapshot_t{:g}.csv", snap.t), snap, cfg);
  }
  fq::write_energy_history(dir / "energy.csv", result, cfg.dt);
  if (result.plan) {
    fmt::print("plan: tau={:g} M={} N={}\n", result.plan->tau(), result.plan->m_neg(), result.plan->n_pos());
  } else {
    fmt::print("plan: exact symbol (alpha = 1)\n");
  }
  for (const auto& snap : result.snapshots) {
    fmt::print("t={:g} total_variation={:.6g}\n", snap.t, fq::total_variation(snap.u));
  }
  fmt::print("energy: {:.10g} -> {:.10g}, max relative step increase {:.3e}\n",
             result.energy_history.front().second, result.energy_history.back().second,
             result.max_energy_increase);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fractional elliptic solver experiments"};
  app.require_subcommand(1);

  Flags conv_flags, quad_flags, bsweep_flags, oracle_flags;
  auto* conv = app.add_subcommand("convergence", "spatial convergence table");
  add_shared_flags(conv, conv_flags);
  auto* quad = app.add_subcommand("quad-sweep", "quadrature error against tau with M tau = N tau = 30");
  add_shared_flags(quad, quad_flags);
  auto* bsweep = app.add_subcommand("b-sweep", "spatial error against the shift b");
  add_shared_flags(bsweep, bsweep_flags);

  auto* oracle = app.add_subcommand("oracle-check", "quadrature and dense oracles on small matrices");
  add_shared_flags(oracle, oracle_flags);
  int cases = 50;
  oracle->add_option("--cases", cases, "number of random HPD matrices")->check(CLI::NonNegativeNumber);

  AllenCahnFlags ac;
  auto* allen = app.add_subcommand("allen-cahn", "periodic fractional Allen-Cahn run");
  allen->add_option("--alpha", ac.alpha, "fractional power in (0, 1]; 1 uses the Laplacian");
  allen->add_option("--grid", ac.sim.n, "grid points per side (power of two)")->capture_default_str();
  allen->add_option("--eps", ac.sim.eps, "interface width")->capture_default_str();
  allen->add_option("--dt", ac.sim.dt, "time step")->capture_default_str();
  allen->add_option("--t-end", ac.sim.t_end, "final time")->capture_default_str();
  allen->add_option("--tol", ac.sim.tol, "quadrature plan tolerance")->capture_default_str();
  allen->add_option("--seed", ac.sim.seed, "initial data seed")->capture_default_str();
  allen->add_option("--snapshots", ac.sim.snapshot_times, "snapshot times")->delimiter(',');
  allen->add_option("--out", ac.out, "output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*conv) {
      const auto cfg = build_config(conv_flags);
      write_rows(cfg, fq::run_spatial_convergence(cfg));
    } else if (*quad) {
      const auto cfg = build_config(quad_flags);
      write_rows(cfg, fq::run_quadrature_sweep(cfg));
    } else if (*bsweep) {
      const auto cfg = build_config(bsweep_flags);
      write_rows(cfg, fq::run_b_sweep(cfg));
    } else if (*oracle) {
      return run_oracle_check(oracle_flags, cases);
    } else if (*allen) {
      return run_allen_cahn(ac);
    }
  } catch (const fq::SimulationError& e) {
    fmt::print(stderr, "error at step {}: {}\n", e.step(), e.what());
    return 1;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
