#pragma once

#include <cstdint>

#include "fracquad/common.hpp"
#include "fracquad/fem.hpp"
#include "fracquad/sparse.hpp"

namespace fracquad {

struct SpectralIndexEstimate {
  double beta = 0.0;      // sup |Im v*Kv| / Re v*Kv
  double theta = 0.0;     // arctan(beta)
  double c0_floor = 0.0;  // smallest eigenvalue of the pencil (K_re, M)
};

class NotAccretiveError : public Error {
 public:
  using Error::Error;
};

struct LanczosOptions {
  int max_steps = 400;
  double rel_tol = 1e-10;
  std::uint64_t seed = 0x5eed;
};

/// Index of the form: largest |lambda| of K_im v = lambda K_re v with
/// K_re = (K + K*)/2 and K_im = (K - K*)/(2i), computed by Lanczos iteration
/// with full reorthogonalization in the K_re inner product.
/// Throws NotAccretiveError when K_re is not positive definite.
SpectralIndexEstimate estimate_beta(const SparseComplex& mass, const SparseComplex& stiff,
                                    const LanczosOptions& options = {});
SpectralIndexEstimate estimate_beta(const DiscreteOperator& op, const LanczosOptions& options = {});

/// Hermitian and skew parts (K_re, K_im) as defined above.
std::pair<SparseComplex, SparseComplex> hermitian_split(const SparseComplex& k);

}  // namespace fracquad
