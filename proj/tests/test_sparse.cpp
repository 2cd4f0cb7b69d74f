#include <doctest.h>

#include <random>

#include <Eigen/LU>

#include "fracquad/sparse.hpp"

using namespace fracquad;

namespace {

CMatrix random_sparse_dense(std::mt19937_64& rng, int n, double density, double diag_boost) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> p(0.0, 1.0);
  CMatrix a = CMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || p(rng) < density) a(i, j) = Complex(u(rng), u(rng));
    }
    a(i, i) += diag_boost;
  }
  return a;
}

}  // namespace

TEST_CASE("triplets are canonicalized") {
  std::vector<Triplet> t{{1, 2, 1.0}, {0, 0, 2.0}, {1, 2, 2.0}, {1, 0, 0.0}, {2, 1, Complex(0, 1)}, {2, 1, Complex(0, -1)}};
  const auto a = SparseComplex::from_triplets(3, t);
  CHECK(a.nonzeros() == 2);
  CHECK(a.coeff(1, 2) == Complex(3.0));
  CHECK(a.coeff(0, 0) == Complex(2.0));
  CHECK(a.coeff(2, 1) == Complex(0.0));
  for (int r = 0; r < a.size(); ++r) {
    for (int p = a.row_offsets()[r] + 1; p < a.row_offsets()[r + 1]; ++p) CHECK(a.col_indices()[p - 1] < a.col_indices()[p]);
  }
  CHECK_THROWS_AS(SparseComplex::from_triplets(2, std::vector<Triplet>{{2, 0, 1.0}}), DimensionError);
}

TEST_CASE("matrix-vector products agree with dense multiplication") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const CMatrix d = random_sparse_dense(rng, 20, 0.3, 0.0);
    const auto a = SparseComplex::from_dense(d);
    const CVector x = CVector::Random(20);
    const CVector ref = d * x;
    CHECK((a * x - ref).norm() <= 1e-13 * ref.norm());
    CHECK((a.to_dense() - d).norm() == 0.0);
    CHECK((a.adjoint().to_dense() - d.adjoint()).norm() == 0.0);
  }
}

TEST_CASE("shift_combine") {
  std::mt19937_64 rng(3);
  const CMatrix md = random_sparse_dense(rng, 10, 0.3, 0.0);
  const CMatrix kd = random_sparse_dense(rng, 10, 0.3, 0.0);
  const auto m = SparseComplex::from_dense(md);
  const auto k = SparseComplex::from_dense(kd);
  const Complex s(0.7, -0.2);
  const CMatrix ref = md + s * kd;
  const CMatrix got = shift_combine(m, k, s).to_dense();
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) CHECK(std::abs(got(i, j) - ref(i, j)) <= 1e-15 * (1.0 + std::abs(ref(i, j))));
  }
  CHECK((shift_combine(m, k, 0.0).to_dense() - md).norm() == 0.0);
  const auto minus_m = SparseComplex::from_dense(-md);
  CHECK(shift_combine(m, minus_m, 1.0).nonzeros() == 0);
  CHECK_THROWS_AS(shift_combine(m, SparseComplex::identity(3), 1.0), DimensionError);
}

TEST_CASE("factorize small examples") {
  const auto id = factorize(SparseComplex::identity(4));
  const CVector rhs = CVector::LinSpaced(4, 1.0, 4.0);
  CHECK((id.solve(rhs) - rhs).norm() == 0.0);

  CMatrix d = CMatrix::Zero(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = 4.0;
  const CVector x = factorize(SparseComplex::from_dense(d)).solve((CVector(2) << 2.0, 4.0).finished());
  CHECK(std::abs(x[0] - 1.0) < 1e-15);
  CHECK(std::abs(x[1] - 1.0) < 1e-15);

  const int n = 50;
  CMatrix lap = CMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    lap(i, i) = 2.0;
    if (i) lap(i, i - 1) = lap(i - 1, i) = -1.0;
  }
  const CVector b = CVector::Random(n);
  const CVector ref = lap.partialPivLu().solve(b);
  const CVector got = factorize(SparseComplex::from_dense(lap)).solve(b);
  CHECK((got - ref).norm() <= 1e-12 * ref.norm());
}

TEST_CASE("singularity is reported by kind") {
  CMatrix structural = CMatrix::Zero(3, 3);
  structural(0, 0) = 1.0;
  structural(1, 0) = 1.0;
  structural(2, 2) = 1.0;
  try {
    factorize(SparseComplex::from_dense(structural));
    FAIL("expected structural singularity");
  } catch (const SingularMatrixError& e) {
    CHECK(e.kind() == Singularity::structural);
  }

  CMatrix numerical = CMatrix::Ones(2, 2);
  try {
    factorize(SparseComplex::from_dense(numerical));
    FAIL("expected numerical singularity");
  } catch (const SingularMatrixError& e) {
    CHECK(e.kind() == Singularity::numerical);
  }
  CHECK_THROWS_AS(factorize(SparseComplex(0)), DimensionError);
  CHECK_THROWS_AS(factorize(SparseComplex::identity(3)).solve(CVector::Ones(2)), DimensionError);
}

TEST_CASE("round-trip residual on random sparse systems") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> size(1, 200);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = size(rng);
    // Diagonal dominance keeps the condition number moderate.
    const CMatrix d = random_sparse_dense(rng, n, 3.0 / n, 6.0);
    const auto a = SparseComplex::from_dense(d);
    const CVector x = CVector::Random(n);
    const CVector rhs = a * x;
    const CVector got = factorize(a).solve(rhs);
    CHECK((a * got - rhs).norm() <= 1e-10 * rhs.norm());
    CHECK((got - x).norm() <= 1e-10 * x.norm());
  }
}

TEST_CASE("real and complex paths of the shifted factorizer") {
  std::mt19937_64 rng(5);
  CMatrix real = random_sparse_dense(rng, 30, 0.1, 5.0).real().cast<Complex>();
  const auto m = SparseComplex::identity(30);
  const auto k = SparseComplex::from_dense(real);
  ShiftedFactorizer f(m, k);
  const CVector b = CVector::Random(30);
  for (double s : {0.1, 1.0, 3.0}) {
    const CVector x = f.factorize(1.0, s).solve(b);
    const CMatrix dense = CMatrix::Identity(30, 30) + s * real;
    CHECK((dense * x - b).norm() <= 1e-12 * b.norm());
  }
  const auto kc = SparseComplex::from_dense(random_sparse_dense(rng, 30, 0.1, 5.0));
  ShiftedFactorizer fc(m, kc);
  ShiftedFactorizer copy(fc);
  const CVector x1 = fc.factorize(1.0, 0.5).solve(b);
  const CVector x2 = copy.factorize(1.0, 0.5).solve(b);
  CHECK((x1 - x2).norm() == 0.0);
  CHECK((shift_combine(m, kc, 0.5) * x1 - b).norm() <= 1e-12 * b.norm());
}

TEST_CASE("solves are deterministic") {
  std::mt19937_64 rng(9);
  const auto a = SparseComplex::from_dense(random_sparse_dense(rng, 80, 0.05, 3.0));
  const CVector b = CVector::Random(80);
  const CVector x1 = factorize(a).solve(b);
  const CVector x2 = factorize(a).solve(b);
  CHECK((x1 - x2).norm() == 0.0);
}
