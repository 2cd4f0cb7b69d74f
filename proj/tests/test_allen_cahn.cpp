#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>

#include "fracquad/allen_cahn.hpp"

using namespace fracquad;
using std::numbers::pi;

TEST_CASE("symbol invariants") {
  for (int n : {2, 8, 32}) {
    const PeriodicSpectralOperator op(n);
    const RealField& s = op.symbol();
    CHECK(s(0, 0) == 0.0);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        if (r || c) CHECK(s(r, c) > 0.0);
        CHECK(s(r, c) == s((n - r) % n, (n - c) % n));
      }
    }
    CHECK(op.spacing() == doctest::Approx(2 * pi / n));
  }
  CHECK(PeriodicSpectralOperator(8).symbol()(0, 3) == 9.0);
  CHECK(PeriodicSpectralOperator(8).symbol()(7, 2) == 5.0);
  CHECK_THROWS(PeriodicSpectralOperator(12));
  CHECK_THROWS(PeriodicSpectralOperator(1));
}

TEST_CASE("transform round trip and mode diagonalization") {
  const int n = 32;
  const PeriodicSpectralOperator op(n);
  const CMatrix f = CMatrix::Random(n, n);
  CHECK((op.inverse(op.forward(f)) - f).norm() <= 1e-12 * f.norm());

  // cos(2 x1 + 3 x2) has (-Delta) eigenvalue 13; check against the symbol.
  CMatrix u(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) u(r, c) = std::cos(2 * op.coordinate(c) + 3 * op.coordinate(r));
  CMatrix spec = op.forward(u);
  spec.array() *= op.symbol().cast<Complex>().array();
  CHECK((op.inverse(spec) - 13.0 * u).norm() <= 1e-10 * u.norm());
}

TEST_CASE("constant fields follow the zero-mode update") {
  const PeriodicSpectralOperator op(16);
  const double eps = 0.1, dt = 1.0 / 128.0;
  const auto exact = ModeResolvent::exact(op, 0.6, 1.0 / (dt * eps * eps));
  for (double c : {0.0, 1.0, -1.0, 0.3, -0.7}) {
    PhaseFieldState s{RealField::Constant(16, 16, c), 0.0, 0, {}};
    const auto next = ac_step(s, op, exact, eps, dt);
    const double expected = c + dt * (c - c * c * c);
    CHECK((next.u.array() - expected).abs().maxCoeff() <= 1e-12);
    CHECK(next.t == doctest::Approx(dt));
    CHECK(next.step == 1);
  }
}

TEST_CASE("quadrature resolvent keeps the equilibria to planner accuracy") {
  const PeriodicSpectralOperator op(16);
  const double eps = 0.1, dt = 1.0 / 128.0, b = 1.0 / (dt * eps * eps);
  const auto plan = plan_from_tolerance(0.6, b, 0.0, 1e-10);
  const auto quad = ModeResolvent::from_plan(op, plan);
  for (double c : {1.0, -1.0}) {
    PhaseFieldState s{RealField::Constant(16, 16, c), 0.0, 0, {}};
    const auto next = ac_step(s, op, quad, eps, dt);
    // Zero-mode factor error times b / eps^2 scaling of the right side.
    const double q0 = quadrature_symbol(plan, 0.0);
    CHECK((next.u.array() - c).abs().maxCoeff() <= std::abs(q0 * b - 1.0) + 1e-13);
  }
  PhaseFieldState zero{RealField::Zero(16, 16), 0.0, 0, {}};
  CHECK(ac_step(zero, op, quad, eps, dt).u.norm() == 0.0);
}

TEST_CASE("per-mode quadrature factor against the symbol") {
  const double b = 12800.0;
  const auto plan = plan_from_tolerance(0.5, b, 0.0, 1e-10);
  const PeriodicSpectralOperator op(64);
  const auto quad = ModeResolvent::from_plan(op, plan);
  const auto exact = ModeResolvent::exact(op, 0.5, b);
  for (int r = 0; r < 64; ++r) {
    for (int c = 0; c < 64; ++c) {
      const double lambda = op.symbol()(r, c);
      const double direct = 1.0 / (std::sqrt(lambda) + b);
      CHECK(exact.factors()(r, c) == doctest::Approx(direct).epsilon(1e-15));
      CHECK(quad.factors()(r, c) == quadrature_symbol(plan, lambda));
      CHECK(std::abs(quad.factors()(r, c) - direct) <= 1e-10);
    }
  }
}

TEST_CASE("energy examples") {
  const int n = 64;
  const PeriodicSpectralOperator op(n);
  CHECK(energy(RealField::Zero(n, n), op, 0.6, 0.1) == doctest::Approx(pi * pi).epsilon(1e-14));
  CHECK(energy(RealField::Ones(n, n), op, 0.6, 0.1) == 0.0);
  CHECK(energy(-RealField::Ones(n, n), op, 0.3, 0.1) == 0.0);

  RealField u(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) u(r, c) = std::sin(op.coordinate(c));

  // Independent oracle: fine trapezoid sums in x1 (exact for trigonometric
  // polynomials of low degree), times the x2 length.
  const int m = 1000;
  double grad = 0.0, pot = 0.0;
  for (int i = 0; i < m; ++i) {
    const double x = 2 * pi * i / m;
    grad += std::cos(x) * std::cos(x);
    pot += 0.25 * std::pow(1.0 - std::sin(x) * std::sin(x), 2);
  }
  grad *= 2 * pi / m * 2 * pi;
  pot *= 2 * pi / m * 2 * pi;
  const double eps = 0.1;
  const double expected = 0.5 * eps * eps * grad + pot;
  CHECK(0.5 * eps * eps * grad == doctest::Approx(0.01 * pi * pi).epsilon(1e-13));
  CHECK(std::abs(energy(u, op, 1.0, eps) - expected) <= 1e-10);
  // For a single mode with |k| = 1 the power does not matter.
  CHECK(std::abs(energy(u, op, 0.4, eps) - expected) <= 1e-10);
}

TEST_CASE("total variation") {
  CHECK(total_variation(RealField::Constant(8, 8, 0.4)) == 0.0);
  RealField checker(4, 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) checker(r, c) = (r + c) % 2 ? 1.0 : -1.0;
  // 2 * 16 periodic neighbour pairs, each jump 2.
  CHECK(total_variation(checker) == 64.0);
}

TEST_CASE("random initial data") {
  const RealField a = random_initial_field(32, 7);
  CHECK(a.minCoeff() >= -0.05);
  CHECK(a.maxCoeff() < 0.05);
  CHECK((a - random_initial_field(32, 7)).norm() == 0.0);
  CHECK((a - random_initial_field(32, 8)).norm() > 0.0);
  CHECK(std::abs(a.mean()) < 0.01);
}

TEST_CASE("short runs decrease the energy and stay bounded") {
  for (double alpha : {0.6, 1.0}) {
    SimulationConfig cfg;
    cfg.n = 32;
    cfg.alpha = alpha;
    cfg.t_end = 2.0;
    cfg.snapshot_times = {0.0, 1.0, 2.0};
    const auto res = run_simulation(cfg);
    CHECK(res.plan.has_value() == (alpha < 1.0));
    CHECK(res.energy_history.size() == 257);
    CHECK(res.max_energy_increase <= 1e-6);
    CHECK(res.energy_history.back().second < res.energy_history.front().second);
    REQUIRE(res.snapshots.size() == 3);
    CHECK(res.snapshots[1].t == doctest::Approx(1.0));
    CHECK(res.final_field.cwiseAbs().maxCoeff() <= 1.5);
    CHECK((res.final_field - run_simulation(cfg).final_field).norm() == 0.0);
  }
}

TEST_CASE("snapshot and energy files") {
  SimulationConfig cfg;
  cfg.n = 8;
  cfg.t_end = 0.5;
  cfg.snapshot_times = {0.5};
  const auto res = run_simulation(cfg);
  const auto dir = std::filesystem::temp_directory_path() / "fracquad_ac_test";
  std::filesystem::create_directories(dir);
  write_snapshot(dir / "snap.csv", res.snapshots.at(0), cfg);
  write_energy_history(dir / "energy.csv", res, cfg.dt);

  std::ifstream snap(dir / "snap.csv");
  std::string line;
  std::getline(snap, line);
  CHECK(line.rfind("# n=8", 0) == 0);
  int rows = 0;
  while (std::getline(snap, line)) ++rows;
  CHECK(rows == 8);

  std::ifstream en(dir / "energy.csv");
  std::getline(en, line);
  CHECK(line == "step,t,energy");
  rows = 0;
  while (std::getline(en, line)) ++rows;
  CHECK(rows == 65);
  std::filesystem::remove_all(dir);
}
