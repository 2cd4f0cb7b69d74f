#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "fracquad/common.hpp"

namespace fracquad {

struct Triplet {
  int row = 0;
  int col = 0;
  Complex value;
};

/// Square complex matrix in compressed row storage.
///
/// Canonical form: column indices strictly increasing within each row and no
/// explicitly stored zeros. Every constructor canonicalizes.
class SparseComplex {
 public:
  SparseComplex() = default;
  explicit SparseComplex(int n);

  /// Duplicates are summed in input order (stable), exact zeros are dropped.
  static SparseComplex from_triplets(int n, std::span<const Triplet> entries);
  static SparseComplex from_dense(const CMatrix& dense);
  static SparseComplex identity(int n);

  int size() const { return n_; }
  std::size_t nonzeros() const { return values_.size(); }

  std::span<const int> row_offsets() const { return row_offsets_; }
  std::span<const int> col_indices() const { return col_indices_; }
  std::span<const Complex> values() const { return values_; }

  /// Stored value at (row, col), zero when absent.
  Complex coeff(int row, int col) const;

  CVector multiply(const CVector& x) const;
  CMatrix to_dense() const;
  SparseComplex adjoint() const;

  bool is_hermitian() const;
  bool is_real() const;

 private:
  int n_ = 0;
  std::vector<int> row_offsets_{0};
  std::vector<int> col_indices_;
  std::vector<Complex> values_;
};

CVector operator*(const SparseComplex& a, const CVector& x);

/// M + s K with the merged sparsity pattern (canonicalized).
SparseComplex shift_combine(const SparseComplex& m, const SparseComplex& k, Complex s);

enum class Singularity { structural, numerical };

class SingularMatrixError : public Error {
 public:
  SingularMatrixError(Singularity kind, const std::string& what) : Error(what), kind_(kind) {}
  Singularity kind() const { return kind_; }

 private:
  Singularity kind_;
};

/// Sparse LU factorization with threshold partial pivoting.
///
/// Immutable after construction; solve() is safe to call concurrently.
class Factorization {
 public:
  class Impl;

  explicit Factorization(std::shared_ptr<const Impl> impl);

  int size() const;
  CVector solve(const CVector& rhs) const;

 private:
  std::shared_ptr<const Impl> impl_;
};

/// Throws DimensionError for an empty matrix and SingularMatrixError when the
/// matrix is structurally (no perfect row/column matching) or numerically
/// singular.
Factorization factorize(const SparseComplex& a);

/// Size of a maximum matching between rows and columns of the pattern.
int structural_rank(const SparseComplex& a);

/// Factorizes M + s K repeatedly on one merged pattern, reusing the symbolic
/// analysis between shifts. Not thread-safe; give each worker its own copy.
class ShiftedFactorizer {
 public:
  ShiftedFactorizer(const SparseComplex& m, const SparseComplex& k);
  ShiftedFactorizer(const ShiftedFactorizer& other);
  ShiftedFactorizer& operator=(const ShiftedFactorizer&) = delete;
  ~ShiftedFactorizer();

  int size() const { return n_; }

  /// Factorization of scale_m * M + scale_k * K.
  Factorization factorize(double scale_m, double scale_k);

 private:
  struct Symbolic;

  int n_ = 0;
  bool real_ = true;
  // Merged pattern in compressed column storage.
  std::vector<int> col_offsets_;
  std::vector<int> row_indices_;
  std::vector<Complex> m_values_;
  std::vector<Complex> k_values_;
  std::shared_ptr<Symbolic> symbolic_;
};

}  // namespace fracquad
