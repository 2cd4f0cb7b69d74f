#include "fracquad/sparse.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include <fmt/format.h>
#include <umfpack.h>

namespace fracquad {

SparseComplex::SparseComplex(int n) : n_(n), row_offsets_(static_cast<std::size_t>(n) + 1, 0) {
  if (n < 0) throw DimensionError("negative matrix dimension");
}

SparseComplex SparseComplex::from_triplets(int n, std::span<const Triplet> entries) {
  SparseComplex out(n);
  for (const auto& t : entries) {
    if (t.row < 0 || t.row >= n || t.col < 0 || t.col >= n) {
      throw DimensionError(fmt::format("triplet ({}, {}) outside a {}x{} matrix", t.row, t.col, n, n));
    }
  }
  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ta = entries[a];
    const auto& tb = entries[b];
    return ta.row != tb.row ? ta.row < tb.row : ta.col < tb.col;
  });

  std::vector<int> counts(static_cast<std::size_t>(n), 0);
  std::size_t i = 0;
  while (i < order.size()) {
    const int row = entries[order[i]].row;
    const int col = entries[order[i]].col;
    Complex sum = 0.0;
    while (i < order.size() && entries[order[i]].row == row && entries[order[i]].col == col) {
      sum += entries[order[i]].value;
      ++i;
    }
    if (sum != Complex(0.0)) {
      out.col_indices_.push_back(col);
      out.values_.push_back(sum);
      ++counts[row];
    }
  }
  for (int r = 0; r < n; ++r) out.row_offsets_[r + 1] = out.row_offsets_[r] + counts[r];
  return out;
}

SparseComplex SparseComplex::from_dense(const CMatrix& dense) {
  if (dense.rows() != dense.cols()) throw DimensionError("dense matrix is not square");
  const int n = static_cast<int>(dense.rows());
  std::vector<Triplet> entries;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (dense(r, c) != Complex(0.0)) entries.push_back({r, c, dense(r, c)});
    }
  }
  return from_triplets(n, entries);
}

SparseComplex SparseComplex::identity(int n) {
  SparseComplex out(n);
  out.col_indices_.resize(static_cast<std::size_t>(n));
  out.values_.assign(static_cast<std::size_t>(n), Complex(1.0));
  for (int r = 0; r < n; ++r) {
    out.col_indices_[r] = r;
    out.row_offsets_[r + 1] = r + 1;
  }
  return out;
}

Complex SparseComplex::coeff(int row, int col) const {
  const auto begin = col_indices_.begin() + row_offsets_[row];
  const auto end = col_indices_.begin() + row_offsets_[row + 1];
  const auto it = std::lower_bound(begin, end, col);
  if (it == end || *it != col) return 0.0;
  return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

CVector SparseComplex::multiply(const CVector& x) const {
  if (x.size() != n_) {
    throw DimensionError(fmt::format("vector of length {} applied to a {}x{} matrix", x.size(), n_, n_));
  }
  CVector y(n_);
  for (int r = 0; r < n_; ++r) {
    Complex sum = 0.0;
    for (int p = row_offsets_[r]; p < row_offsets_[r + 1]; ++p) sum += values_[p] * x[col_indices_[p]];
    y[r] = sum;
  }
  return y;
}

CVector operator*(const SparseComplex& a, const CVector& x) { return a.multiply(x); }

CMatrix SparseComplex::to_dense() const {
  CMatrix dense = CMatrix::Zero(n_, n_);
  for (int r = 0; r < n_; ++r) {
    for (int p = row_offsets_[r]; p < row_offsets_[r + 1]; ++p) dense(r, col_indices_[p]) = values_[p];
  }
  return dense;
}

SparseComplex SparseComplex::adjoint() const {
  std::vector<Triplet> entries;
  entries.reserve(values_.size());
  for (int r = 0; r < n_; ++r) {
    for (int p = row_offsets_[r]; p < row_offsets_[r + 1]; ++p) {
      entries.push_back({col_indices_[p], r, std::conj(values_[p])});
    }
  }
  return from_triplets(n_, entries);
}

bool SparseComplex::is_hermitian() const {
  for (int r = 0; r < n_; ++r) {
    for (int p = row_offsets_[r]; p < row_offsets_[r + 1]; ++p) {
      if (coeff(col_indices_[p], r) != std::conj(values_[p])) return false;
    }
  }
  return true;
}

bool SparseComplex::is_real() const {
  return std::all_of(values_.begin(), values_.end(), [](Complex v) { return v.imag() == 0.0; });
}

SparseComplex shift_combine(const SparseComplex& m, const SparseComplex& k, Complex s) {
  if (m.size() != k.size()) {
    throw DimensionError(fmt::format("cannot combine {}x{} and {}x{} matrices", m.size(), m.size(),
                                     k.size(), k.size()));
  }
  const int n = m.size();
  std::vector<Triplet> entries;
  entries.reserve(m.nonzeros() + k.nonzeros());
  const auto m_rows = m.row_offsets();
  const auto k_rows = k.row_offsets();
  for (int r = 0; r < n; ++r) {
    int pm = m_rows[r];
    int pk = k_rows[r];
    while (pm < m_rows[r + 1] || pk < k_rows[r + 1]) {
      const int cm = pm < m_rows[r + 1] ? m.col_indices()[pm] : n;
      const int ck = pk < k_rows[r + 1] ? k.col_indices()[pk] : n;
      if (cm == ck) {
        entries.push_back({r, cm, m.values()[pm++] + s * k.values()[pk++]});
      } else if (cm < ck) {
        entries.push_back({r, cm, m.values()[pm++]});
      } else {
        entries.push_back({r, ck, s * k.values()[pk++]});
      }
    }
  }
  return SparseComplex::from_triplets(n, entries);
}

int structural_rank(const SparseComplex& a) {
  const int n = a.size();
  const auto rows = a.row_offsets();
  const auto cols = a.col_indices();
  std::vector<int> row_of_col(static_cast<std::size_t>(n), -1);
  std::vector<int> col_of_row(static_cast<std::size_t>(n), -1);

  // Cheap pass: diagonal first, then any free column.
  for (int r = 0; r < n; ++r) {
    if (a.coeff(r, r) != Complex(0.0) && row_of_col[r] < 0) {
      row_of_col[r] = r;
      col_of_row[r] = r;
    }
  }
  for (int r = 0; r < n; ++r) {
    if (col_of_row[r] >= 0) continue;
    for (int p = rows[r]; p < rows[r + 1]; ++p) {
      if (row_of_col[cols[p]] < 0) {
        row_of_col[cols[p]] = r;
        col_of_row[r] = cols[p];
        break;
      }
    }
  }

  // Augmenting paths by iterative depth-first search.
  std::vector<int> visited(static_cast<std::size_t>(n), -1);
  std::vector<int> next_edge(static_cast<std::size_t>(n));
  std::vector<int> stack;
  for (int start = 0; start < n; ++start) {
    if (col_of_row[start] >= 0) continue;
    stack.assign(1, start);
    next_edge[start] = rows[start];
    bool augmented = false;
    while (!stack.empty() && !augmented) {
      const int r = stack.back();
      if (next_edge[r] >= rows[r + 1]) {
        stack.pop_back();
        continue;
      }
      const int c = cols[next_edge[r]++];
      if (visited[c] == start) continue;
      visited[c] = start;
      if (row_of_col[c] < 0) {
        // Flip the path recorded on the stack.
        int col = c;
        for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
          const int prev = col_of_row[*it];
          col_of_row[*it] = col;
          row_of_col[col] = *it;
          col = prev;
        }
        augmented = true;
      } else {
        const int next_row = row_of_col[c];
        next_edge[next_row] = rows[next_row];
        stack.push_back(next_row);
      }
    }
  }
  return static_cast<int>(std::count_if(col_of_row.begin(), col_of_row.end(), [](int c) { return c >= 0; }));
}

// ---------------------------------------------------------------------------
// UMFPACK-backed factorization

namespace {

void throw_on_umfpack_error(int status, const char* stage) {
  if (status == UMFPACK_WARNING_singular_matrix) {
    throw SingularMatrixError(Singularity::numerical,
                              fmt::format("matrix is numerically singular ({})", stage));
  }
  if (status < 0) throw Error(fmt::format("sparse LU {} failed with status {}", stage, status));
}

struct CscArrays {
  std::vector<int> col_offsets;
  std::vector<int> row_indices;
  std::vector<Complex> values;
};

CscArrays to_csc(const SparseComplex& a) {
  const int n = a.size();
  CscArrays out;
  out.col_offsets.assign(static_cast<std::size_t>(n) + 1, 0);
  out.row_indices.resize(a.nonzeros());
  out.values.resize(a.nonzeros());
  for (int c : a.col_indices()) ++out.col_offsets[c + 1];
  for (int c = 0; c < n; ++c) out.col_offsets[c + 1] += out.col_offsets[c];
  std::vector<int> cursor(out.col_offsets.begin(), out.col_offsets.end() - 1);
  const auto rows = a.row_offsets();
  for (int r = 0; r < n; ++r) {
    for (int p = rows[r]; p < rows[r + 1]; ++p) {
      const int dst = cursor[a.col_indices()[p]]++;
      out.row_indices[dst] = r;
      out.values[dst] = a.values()[p];
    }
  }
  return out;
}

}  // namespace

class Factorization::Impl {
 public:
  Impl(int n, bool real, std::vector<int> col_offsets, std::vector<int> row_indices,
       std::vector<Complex> values, void* symbolic)
      : n_(n), real_(real), col_offsets_(std::move(col_offsets)), row_indices_(std::move(row_indices)) {
    int status = 0;
    if (real_) {
      real_values_.resize(values.size());
      std::transform(values.begin(), values.end(), real_values_.begin(), [](Complex v) { return v.real(); });
      status = umfpack_di_numeric(col_offsets_.data(), row_indices_.data(), real_values_.data(), symbolic,
                                  &numeric_, nullptr, nullptr);
    } else {
      complex_values_ = std::move(values);
      status = umfpack_zi_numeric(col_offsets_.data(), row_indices_.data(),
                                  reinterpret_cast<const double*>(complex_values_.data()), nullptr, symbolic,
                                  &numeric_, nullptr, nullptr);
    }
    if (status != UMFPACK_OK) {
      release();
      throw_on_umfpack_error(status, "numeric factorization");
    }
  }

  Impl(const Impl&) = delete;
  Impl& operator=(const Impl&) = delete;
  ~Impl() { release(); }

  int size() const { return n_; }

  CVector solve(const CVector& rhs) const {
    if (rhs.size() != n_) {
      throw DimensionError(fmt::format("right-hand side of length {} for a system of size {}", rhs.size(), n_));
    }
    CVector x(n_);
    int status = 0;
    if (real_) {
      std::vector<double> b(static_cast<std::size_t>(n_));
      std::vector<double> sol(static_cast<std::size_t>(n_));
      for (int part = 0; part < 2; ++part) {
        bool nonzero = false;
        for (int i = 0; i < n_; ++i) {
          b[i] = part == 0 ? rhs[i].real() : rhs[i].imag();
          nonzero = nonzero || b[i] != 0.0;
        }
        if (!nonzero) {
          std::fill(sol.begin(), sol.end(), 0.0);
        } else {
          status = umfpack_di_solve(UMFPACK_A, col_offsets_.data(), row_indices_.data(), real_values_.data(),
                                    sol.data(), b.data(), numeric_, nullptr, nullptr);
          if (status < 0) throw_on_umfpack_error(status, "solve");
        }
        for (int i = 0; i < n_; ++i) {
          if (part == 0) {
            x[i] = Complex(sol[i], 0.0);
          } else {
            x[i] += Complex(0.0, sol[i]);
          }
        }
      }
    } else {
      status = umfpack_zi_solve(UMFPACK_A, col_offsets_.data(), row_indices_.data(),
                                reinterpret_cast<const double*>(complex_values_.data()), nullptr,
                                reinterpret_cast<double*>(x.data()), nullptr,
                                reinterpret_cast<const double*>(rhs.data()), nullptr, numeric_, nullptr, nullptr);
      if (status < 0) throw_on_umfpack_error(status, "solve");
    }
    return x;
  }

 private:
  void release() {
    if (numeric_ == nullptr) return;
    if (real_) {
      umfpack_di_free_numeric(&numeric_);
    } else {
      umfpack_zi_free_numeric(&numeric_);
    }
    numeric_ = nullptr;
  }

  int n_;
  bool real_;
  std::vector<int> col_offsets_;
  std::vector<int> row_indices_;
  std::vector<double> real_values_;
  std::vector<Complex> complex_values_;
  void* numeric_ = nullptr;
};

Factorization::Factorization(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

int Factorization::size() const { return impl_->size(); }

CVector Factorization::solve(const CVector& rhs) const { return impl_->solve(rhs); }

struct ShiftedFactorizer::Symbolic {
  bool real = true;
  void* handle = nullptr;

  Symbolic() = default;
  Symbolic(const Symbolic&) = delete;
  Symbolic& operator=(const Symbolic&) = delete;
  ~Symbolic() {
    if (handle == nullptr) return;
    if (real) {
      umfpack_di_free_symbolic(&handle);
    } else {
      umfpack_zi_free_symbolic(&handle);
    }
  }
};

ShiftedFactorizer::ShiftedFactorizer(const SparseComplex& m, const SparseComplex& k) : n_(m.size()) {
  if (m.size() != k.size()) {
    throw DimensionError(fmt::format("mass is {}x{} but stiffness is {}x{}", m.size(), m.size(), k.size(), k.size()));
  }
  if (n_ == 0) throw DimensionError("cannot factorize an empty matrix");
  real_ = m.is_real() && k.is_real();

  // Merge the two patterns; entries are kept even when they cancel for some shift.
  std::vector<Triplet> pattern;
  pattern.reserve(m.nonzeros() + k.nonzeros());
  for (int r = 0; r < n_; ++r) {
    for (int p = m.row_offsets()[r]; p < m.row_offsets()[r + 1]; ++p) pattern.push_back({r, m.col_indices()[p], 1.0});
    for (int p = k.row_offsets()[r]; p < k.row_offsets()[r + 1]; ++p) pattern.push_back({r, k.col_indices()[p], 1.0});
  }
  const SparseComplex merged = SparseComplex::from_triplets(n_, pattern);
  if (structural_rank(merged) < n_) {
    throw SingularMatrixError(Singularity::structural, "shifted matrix pattern is structurally singular");
  }
  CscArrays csc = to_csc(merged);
  col_offsets_ = std::move(csc.col_offsets);
  row_indices_ = std::move(csc.row_indices);
  m_values_.resize(row_indices_.size());
  k_values_.resize(row_indices_.size());
  for (int c = 0; c < n_; ++c) {
    for (int p = col_offsets_[c]; p < col_offsets_[c + 1]; ++p) {
      m_values_[p] = m.coeff(row_indices_[p], c);
      k_values_[p] = k.coeff(row_indices_[p], c);
    }
  }
}

ShiftedFactorizer::ShiftedFactorizer(const ShiftedFactorizer& other)
    : n_(other.n_),
      real_(other.real_),
      col_offsets_(other.col_offsets_),
      row_indices_(other.row_indices_),
      m_values_(other.m_values_),
      k_values_(other.k_values_) {}

ShiftedFactorizer::~ShiftedFactorizer() = default;

Factorization ShiftedFactorizer::factorize(double scale_m, double scale_k) {
  std::vector<Complex> values(m_values_.size());
  for (std::size_t p = 0; p < values.size(); ++p) values[p] = scale_m * m_values_[p] + scale_k * k_values_[p];

  if (!symbolic_) {
    auto symbolic = std::make_shared<Symbolic>();
    symbolic->real = real_;
    int status = 0;
    if (real_) {
      std::vector<double> re(values.size());
      std::transform(values.begin(), values.end(), re.begin(), [](Complex v) { return v.real(); });
      status = umfpack_di_symbolic(n_, n_, col_offsets_.data(), row_indices_.data(), re.data(), &symbolic->handle,
                                   nullptr, nullptr);
    } else {
      status = umfpack_zi_symbolic(n_, n_, col_offsets_.data(), row_indices_.data(),
                                   reinterpret_cast<const double*>(values.data()), nullptr, &symbolic->handle,
                                   nullptr, nullptr);
    }
    if (status != UMFPACK_OK) throw_on_umfpack_error(status, "symbolic analysis");
    symbolic_ = std::move(symbolic);
  }
  auto impl = std::make_shared<const Factorization::Impl>(n_, real_, col_offsets_, row_indices_, std::move(values),
                                                          symbolic_->handle);
  return Factorization(std::move(impl));
}

Factorization factorize(const SparseComplex& a) {
  if (a.size() == 0) throw DimensionError("cannot factorize an empty matrix");
  if (structural_rank(a) < a.size()) {
    throw SingularMatrixError(Singularity::structural,
                              fmt::format("matrix is structurally singular (structural rank {} < {})",
                                          structural_rank(a), a.size()));
  }
  ShiftedFactorizer factorizer(a, SparseComplex(a.size()));
  return factorizer.factorize(1.0, 0.0);
}

}  // namespace fracquad
