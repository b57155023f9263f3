#pragma once

#include "pf2/types.hpp"

#include <span>

namespace pf2 {

/// Truncated SVD A ≈ left·diag(singular_values)·rightᵀ, values descending.
struct ThinSvd {
  Matrix left;             // m×r, orthonormal columns
  Vector singular_values;  // r, non-increasing, non-negative
  Matrix right;            // n×r, orthonormal columns
};

/// Rank-r truncated SVD. Tall inputs (m ≥ 4n) go through the eigensolve of
/// the n×n Gram matrix; the result falls back to a direct SVD when the
/// retained spectrum has condition number above 1e7 or the recovered left
/// vectors fail an orthonormality check. Throws NumericalError on non-finite
/// input and ShapeError on a bad r.
ThinSvd thin_svd(const Matrix& a, Index r);

struct PolarFactor {
  Matrix q;                    // m×r, orthonormal columns
  bool rank_deficient = false;  // σ_min < 1e-12·σ_max; deficient directions were completed
};

/// Orthonormal polar factor of a tall A (m ≥ r): the Q maximizing
/// trace(AᵀQ), i.e. the orthogonal Procrustes solution. When A is rank
/// deficient the missing left singular directions are filled with an
/// arbitrary orthonormal completion and `rank_deficient` is set.
PolarFactor orthonormal_polar(const Matrix& a);

/// Lower Cholesky factor L of an SPD matrix, L·Lᵀ = A.
class CholeskyFactor {
 public:
  /// Throws CholeskyError naming the first non-positive leading minor.
  static CholeskyFactor factor(const Matrix& spd);

  const Matrix& lower() const noexcept { return lower_; }
  Index size() const noexcept { return lower_.rows(); }

  /// Solves (L·Lᵀ)·X = rhs by two triangular solves.
  Matrix solve(const Matrix& rhs) const;

 private:
  explicit CholeskyFactor(Matrix lower) : lower_(std::move(lower)) {}
  Matrix lower_;
};

/// Solves (G + ρI)·X = rhs with one Cholesky factorization.
Matrix spd_solve(const Matrix& g, double rho, const Matrix& rhs);

/// Element-wise product of Z_iᵀZ_i over every i except `skip`.
/// With a single remaining factor this is just its Gram matrix.
Matrix gram_hadamard(std::span<const Matrix> factors, std::size_t skip);

/// Column-wise Kronecker product: row i·rows(B)+j, column r holds A(i,r)·B(j,r).
/// Materializes the full product; intended for reference computations.
Matrix naive_khatri_rao(const Matrix& a, const Matrix& b);

}  // namespace pf2
