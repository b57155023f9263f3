#pragma once

#include "pf2/types.hpp"

#include <vector>

namespace pf2 {

/// Fitted PARAFAC2 factors. X_k ≈ U_k·diag(W(k,:))·Vᵀ with U_k = Q_k·H, or
/// U_k = C_k·Q_k·H when `projectors` holds the per-slice spline bases C_k.
struct Parafac2Model {
  std::vector<Matrix> q;           // K matrices, I_k×R (rank_k×R in smooth mode)
  Matrix h;                        // R×R
  Matrix w;                        // K×R; row k is diag(S_k)
  Matrix v;                        // J×R
  std::vector<Matrix> projectors;  // empty, or K matrices C_k (I_k×rank_k)

  Index rank() const noexcept { return h.cols(); }
  Index n_slices() const noexcept { return w.rows(); }
  bool smooth() const noexcept { return !projectors.empty(); }

  /// U_k. Throws std::out_of_range for a bad k.
  Matrix u(Index k) const;
};

}  // namespace pf2
