#include <doctest.h>

#include <cmath>
#include <limits>
#include <functional>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "fracquad/coefficients.hpp"
#include "fracquad/fem.hpp"
#include "fracquad/mesh.hpp"
#include "fracquad/quadrature.hpp"

using namespace fracquad;
using std::numbers::pi;

namespace {

double signed_area(const MeshP1& m, const std::array<int, 3>& t) {
  const Point a = m.nodes()[t[0]], b = m.nodes()[t[1]], c = m.nodes()[t[2]];
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

// 5-point Gauss-Legendre on [0, 1].
double gauss_1d(const std::function<double(double)>& g) {
  static const double x[] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
  static const double w[] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665, 0.2369268850561891};
  double s = 0.0;
  for (int i = 0; i < 5; ++i) s += 0.5 * w[i] * g(0.5 * (x[i] + 1.0));
  return s;
}

}  // namespace

TEST_CASE("mesh examples") {
  auto m1 = build_mesh(1);
  CHECK(m1->node_count() == 4);
  CHECK(m1->triangle_count() == 2);
  CHECK(m1->interior_count() == 0);
  for (int i = 0; i < 4; ++i) CHECK(m1->is_boundary(i));

  auto m2 = build_mesh(2);
  CHECK(m2->node_count() == 9);
  CHECK(m2->triangle_count() == 8);
  REQUIRE(m2->interior_count() == 1);
  const Point c = m2->nodes()[m2->interior_nodes()[0]];
  CHECK(c.x == 0.5);
  CHECK(c.y == 0.5);

  auto m8 = build_mesh(8);
  CHECK(m8->h() == 0.125);
  CHECK(m8->interior_count() == 49);

  CHECK_THROWS_AS(build_mesh(0), std::invalid_argument);
  CHECK_THROWS_AS(build_mesh(-3), std::invalid_argument);
}

TEST_CASE("mesh invariants") {
  for (int n : {1, 2, 3, 5, 8, 16}) {
    const auto m = build_mesh(n);
    CHECK(m->node_count() == (n + 1) * (n + 1));
    CHECK(m->triangle_count() == 2 * n * n);
    for (const auto& t : m->triangles()) CHECK(signed_area(*m, t) == doctest::Approx(0.5 * m->h() * m->h()).epsilon(1e-13));
    int interior = 0;
    for (int i = 0; i < m->node_count(); ++i) {
      const Point p = m->nodes()[i];
      const bool boundary = p.x == 0.0 || p.x == 1.0 || p.y == 0.0 || p.y == 1.0;
      CHECK(m->is_boundary(i) == boundary);
      if (!boundary) CHECK(m->interior_index(i) == interior++);
      else CHECK(m->interior_index(i) == -1);
    }
    CHECK(interior == m->interior_count());
  }
  // Vertex sets nest under dyadic refinement.
  const auto coarse = build_mesh(4);
  const auto fine = build_mesh(16);
  CHECK(coarse->nests_into(*fine));
  CHECK_FALSE(build_mesh(3)->nests_into(*build_mesh(8)));
  CHECK_FALSE(build_mesh(4)->nests_into(*build_mesh(12)));
  for (int i = 0; i <= 4; ++i) {
    for (int j = 0; j <= 4; ++j) {
      const Point p = coarse->nodes()[coarse->node_index(i, j)];
      const Point q = fine->nodes()[fine->node_index(4 * i, 4 * j)];
      CHECK(p.x == q.x);
      CHECK(p.y == q.y);
    }
  }
}

TEST_CASE("Laplacian stiffness: diagonal entry from the six-triangle patch") {
  const auto op = assemble(build_mesh(6), make_coefficients(OperatorPreset::a1));
  const auto& mesh = *op.mesh;
  // Independent: sum over triangles touching the node of |opposite edge|^2 / (4 area).
  for (int node : mesh.interior_nodes()) {
    double diag = 0.0;
    for (const auto& t : mesh.triangles()) {
      for (int k = 0; k < 3; ++k) {
        if (t[k] != node) continue;
        const Point a = mesh.nodes()[t[(k + 1) % 3]];
        const Point b = mesh.nodes()[t[(k + 2) % 3]];
        const double e2 = (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y);
        diag += e2 / (4.0 * signed_area(mesh, t));
      }
    }
    const int dof = mesh.interior_index(node);
    CHECK(op.stiff.coeff(dof, dof).real() == doctest::Approx(diag).epsilon(1e-13));
    CHECK(op.stiff.coeff(dof, dof).real() == doctest::Approx(4.0).epsilon(1e-13));
  }
  CHECK(op.stiff.is_real());
  CHECK(op.stiff.is_hermitian());
}

TEST_CASE("Laplacian smallest pencil eigenvalue approaches 2 pi^2") {
  double previous = std::numeric_limits<double>::infinity();
  for (int n : {8, 16, 32}) {
    const auto op = assemble(build_mesh(n), make_coefficients(OperatorPreset::a1));
    const Eigen::MatrixXd k = op.stiff.to_dense().real();
    const Eigen::MatrixXd m = op.mass.to_dense().real();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(k, m, Eigen::EigenvaluesOnly);
    const double lambda = es.eigenvalues()[0];
    CHECK(lambda > 2 * pi * pi);
    CHECK(lambda < previous);
    previous = lambda;
  }
  CHECK(previous == doctest::Approx(2 * pi * pi).epsilon(0.01));
}

TEST_CASE("pure reaction form reproduces the mass matrix") {
  const auto op = assemble(build_mesh(7), mass_coefficients());
  CHECK((op.stiff.to_dense() - op.mass.to_dense()).norm() == 0.0);
}

TEST_CASE("mass matrix properties") {
  for (int n : {2, 5, 16}) {
    const auto mesh = build_mesh(n);
    const auto op = assemble(mesh, make_coefficients(OperatorPreset::a3));
    CHECK(op.mass.is_hermitian());
    const SparseComplex full = assemble_full_mass(*mesh);
    // Extended-precision accumulation keeps summation error out of the check.
    long double re = 0.0L, im = 0.0L;
    for (auto v : full.values()) {
      re += v.real();
      im += v.imag();
    }
    CHECK(std::abs(static_cast<double>(re - 1.0L)) <= 1e-14);
    CHECK(im == 0.0L);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.mass.to_dense().real(), Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues()[0] > 0.0);
  }
}

TEST_CASE("adjoint form assembles the conjugate transpose") {
  for (auto preset : {OperatorPreset::a1, OperatorPreset::a2, OperatorPreset::a3}) {
    const auto mesh = build_mesh(8);
    const auto primal = assemble(mesh, make_coefficients(preset));
    const auto dual = assemble(mesh, make_coefficients(preset), FormKind::adjoint);
    const CMatrix diff = dual.stiff.to_dense() - primal.stiff.to_dense().adjoint();
    CHECK(diff.norm() <= 1e-13 * primal.stiff.to_dense().norm());
  }
}

TEST_CASE("discrete accretivity on random vectors") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> g;
  for (auto preset : {OperatorPreset::a1, OperatorPreset::a2, OperatorPreset::a3}) {
    const auto op = assemble(build_mesh(8), make_coefficients(preset));
    for (int trial = 0; trial < 200; ++trial) {
      CVector v(op.dofs());
      for (int i = 0; i < v.size(); ++i) v[i] = Complex(g(rng), g(rng));
      CHECK(v.dot(op.stiff * v).real() > 0.0);
    }
  }
}

TEST_CASE("coefficient presets evaluate to their definitions") {
  const Point p{0.3, 0.7};
  const auto a2 = make_coefficients(OperatorPreset::a2);
  const Matrix2c c2 = a2.diffusion(p);
  CHECK(std::abs(c2(0, 0) - (1.0 + 0.5 * std::sin(pi * 0.3))) == 0.0);
  CHECK(std::abs(c2(0, 1) - 0.5 * std::cos(pi * 0.3)) == 0.0);
  CHECK(std::abs(c2(1, 0) - 0.5 * std::sin(pi * 0.7)) == 0.0);
  CHECK(std::abs(c2(1, 1) - (1.0 + 0.5 * std::cos(pi * 0.7))) == 0.0);
  CHECK(a2.convection(p)[0] == Complex(0.5 + 0.7));
  CHECK(a2.convection(p)[1] == Complex(0.5 + 0.3));

  const Matrix2c c3 = make_coefficients(OperatorPreset::a3).diffusion(p);
  CHECK(c3(0, 0) == Complex(0.5 + 0.7, 5 * 0.3));
  CHECK(c3(0, 1) == Complex(0.3 - 0.7, 0.0));
  CHECK(c3(1, 0) == Complex(0.0, -0.3 * 0.7));
  CHECK(c3(1, 1) == Complex(0.5 + 0.3, 5 * 0.7));
  CHECK(make_coefficients(OperatorPreset::a3).diffusion(p) == c3);

  CHECK(make_source(SourcePreset::f1)(p).real() == doctest::Approx(0.3 * 0.7 * 0.7 * 0.3).epsilon(1e-15));
  CHECK(make_source(SourcePreset::f2)(p).real() == doctest::Approx(std::pow(0.3 * 0.7 * 0.7 * 0.3, 0.51)));
  CHECK(make_source(SourcePreset::f3)(p) == Complex(1.0));
  CHECK(parse_operator("A2") == OperatorPreset::a2);
  CHECK(parse_source("f3") == SourcePreset::f3);
  CHECK_THROWS_AS(parse_operator("a4"), std::invalid_argument);
  CHECK_THROWS_AS(parse_source("g1"), std::invalid_argument);
}

TEST_CASE("non-finite coefficients are rejected with the triangle") {
  CoefficientField bad = make_coefficients(OperatorPreset::a1);
  bad.reaction = [](Point p) { return p.x > 0.9 && p.y < 0.1 ? Complex(std::nan(""), 0.0) : Complex(0.0); };
  try {
    assemble(build_mesh(4), bad);
    FAIL("expected AssemblyError");
  } catch (const AssemblyError& e) {
    CHECK(std::string(e.what()).find("triangle") != std::string::npos);
  }
  CHECK_THROWS_AS(load_vector(*build_mesh(4), [](Point) { return Complex(INFINITY, 0.0); }), AssemblyError);
}

TEST_CASE("load vector examples") {
  const auto m2 = build_mesh(2);
  CHECK(load_vector(*m2, [](Point) { return Complex(0.0); }).norm() == 0.0);
  // Hat function: pyramid of height 1 over its support, volume = support area / 3.
  const double support = 6 * 0.5 * m2->h() * m2->h();
  const CVector one = load_vector(*m2, make_source(SourcePreset::f3));
  CHECK(one[0].real() == doctest::Approx(support / 3.0).epsilon(1e-15));
  CHECK(one[0].real() == doctest::Approx(0.25).epsilon(1e-15));

  const CVector f1 = load_vector(*build_mesh(8), make_source(SourcePreset::f1));
  for (int i = 0; i < f1.size(); ++i) {
    CHECK(f1[i].real() > 0.0);
    CHECK(f1[i].imag() == 0.0);
  }
}

TEST_CASE("l2 error transfer") {
  const auto coarse = build_mesh(4);
  const auto fine = build_mesh(16);
  const auto fine_op = assemble(fine, mass_coefficients());
  const auto coarse_op = assemble(coarse, mass_coefficients());

  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  CVector c(coarse->interior_count());
  for (int i = 0; i < c.size(); ++i) c[i] = Complex(g(rng), g(rng));
  const GridFunction cf{coarse, c};
  const GridFunction interpolated{fine, prolongate(cf, *fine)};
  // Nested P1 spaces: the interpolant is the same function.
  CHECK(l2_error(cf, interpolated) <= 1e-14 * l2_norm(coarse_op.mass, c));
  CHECK(l2_norm(fine_op.mass, interpolated.values) == doctest::Approx(l2_norm(coarse_op.mass, c)).epsilon(1e-13));

  // Identical meshes: the norm of the difference.
  CVector d(fine->interior_count());
  for (int i = 0; i < d.size(); ++i) d[i] = Complex(g(rng), g(rng));
  const GridFunction a{fine, interpolated.values + d};
  const double expected = std::sqrt(d.dot(fine_op.mass * d).real());
  CHECK(l2_error(a, interpolated) == doctest::Approx(expected).epsilon(1e-12));

  CHECK_THROWS_AS(l2_error({build_mesh(3), CVector::Zero(4)}, interpolated), Error);
  CHECK_THROWS_AS(l2_error({coarse, CVector::Zero(2)}, interpolated), DimensionError);
}

TEST_CASE("norm of the projected f1 approaches its exact L2 norm") {
  // int_0^1 x^2 (1 - x)^2 dx by Gauss quadrature, squared for the tensor product.
  const double axis = gauss_1d([](double x) { return x * x * (1 - x) * (1 - x); });
  const double exact = std::sqrt(axis * axis);
  CHECK(exact == doctest::Approx(1.0 / 30.0).epsilon(1e-14));

  double previous_gap = std::numeric_limits<double>::infinity();
  for (int n : {8, 16, 32}) {
    const auto mesh = build_mesh(n);
    const auto op = assemble(mesh, mass_coefficients());
    const CVector b = load_vector(*mesh, make_source(SourcePreset::f1));
    const CVector proj = factorize(op.mass).solve(b);
    const GridFunction zero{build_mesh(4), CVector::Zero(9)};
    const double norm = l2_error(zero, {mesh, proj});
    const double gap = std::abs(norm - exact);
    CHECK(gap < previous_gap);
    previous_gap = gap;
  }
  CHECK(previous_gap < 1e-3 * exact);
}

TEST_CASE("Galerkin differences shrink under refinement") {
  const auto plan = plan_explicit(0.5, 1.0, 0.0, 0.3, 60, 60);
  double previous = std::numeric_limits<double>::infinity();
  for (int n : {4, 8, 16}) {
    const auto coarse = build_mesh(n);
    const auto fine = build_mesh(2 * n);
    const auto opc = assemble(coarse, make_coefficients(OperatorPreset::a1));
    const auto opf = assemble(fine, make_coefficients(OperatorPreset::a1));
    const auto uc = apply_inverse(opc, plan, load_vector(*coarse, make_source(SourcePreset::f1)));
    const auto uf = apply_inverse(opf, plan, load_vector(*fine, make_source(SourcePreset::f1)));
    const double diff = l2_error(uc, uf);
    CHECK(diff < previous);
    previous = diff;
  }
}
