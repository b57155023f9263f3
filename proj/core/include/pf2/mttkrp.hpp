#pragma once

#include "pf2/tensor.hpp"
#include "pf2/types.hpp"

#include <span>
#include <variant>
#include <vector>

namespace pf2 {

/// Non-owning view of one data slice: either a sparse X_k or a dense
/// projected slice X′_k = C_kᵀX_k. The referenced storage must outlive it.
class SliceOperand {
 public:
  explicit SliceOperand(const SparseSlice& sparse) : data_(&sparse) {}
  explicit SliceOperand(const Matrix& dense) : data_(&dense) {}

  Index rows() const noexcept;
  bool is_sparse() const noexcept { return std::holds_alternative<const SparseSlice*>(data_); }

  /// X·B.
  Matrix times(const Matrix& b) const;
  /// Xᵀ·B (result has n_cols rows).
  Matrix transpose_times(const Matrix& b, Index n_cols) const;
  double frobenius_norm_sq() const;

 private:
  std::variant<const SparseSlice*, const Matrix*> data_;
};

std::vector<SliceOperand> operands_of(const IrregularTensor& tensor);

/// The tensor Y with slices Y_k = Q_kᵀX_k, never materialized.
class ImplicitY {
 public:
  /// Throws ShapeError unless every Q_k is rows(X_k)×R with a common R.
  ImplicitY(std::span<const SliceOperand> slices, std::span<const Matrix> q, Index n_cols);

  Index n_slices() const noexcept { return static_cast<Index>(slices_.size()); }
  Index n_cols() const noexcept { return n_cols_; }
  Index rank() const noexcept { return rank_; }
  const SliceOperand& slice(Index k) const { return slices_[static_cast<std::size_t>(k)]; }
  const Matrix& q(Index k) const { return q_[static_cast<std::size_t>(k)]; }

 private:
  std::span<const SliceOperand> slices_;
  std::span<const Matrix> q_;
  Index n_cols_ = 0;
  Index rank_ = 0;
};

/// How per-slice contributions are combined. With `deterministic` set, each
/// slice's partial result is formed separately and the partials are summed in
/// ascending k, so the output is bit-identical for any thread count. Otherwise
/// each worker accumulates its own block and the blocks are summed, which
/// agrees with the serial result to about 1e-9 relative.
struct ReductionPolicy {
  int threads = 1;
  bool deterministic = true;
};

/// F = Y_(n)·(Khatri-Rao of the other two factors), computed slice by slice:
///   Mode::W  F(k,:) = colwise dot(H, Q_kᵀ·(X_k·V))                   (K×R)
///   Mode::V  F = Σ_k X_kᵀ·((Q_k·H)·diag(W(k,:)))                      (J×R)
///   Mode::H  F = Σ_k (Q_kᵀ·(X_k·V))·diag(W(k,:))                      (R×R)
/// Y is R×J×K; the tensor modes are 1 = H, 2 = V, 3 = W.
/// Throws ShapeError on inconsistent factors, NumericalError on a non-finite result.
Matrix slicewise_mttkrp(const ImplicitY& y, Mode mode, const Matrix& h, const Matrix& w, const Matrix& v,
                        const ReductionPolicy& policy = {});

}  // namespace pf2
