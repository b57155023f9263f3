#pragma once

#include "pf2/tensor.hpp"
#include "pf2/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace pf2 {

/// Knot vector and degree of a spline family with n_basis functions.
/// n_basis == knots.size() - degree - 1.
struct SplineBasis {
  std::vector<double> knots;
  int degree = 3;
  Index n_basis = 0;
};

/// Per-slice basis matrix M_k (I_k×l) and the orthonormal basis C_k of its
/// column space, truncated at numerical rank σ_i > 1e-10·σ_max.
struct SliceBasisMatrix {
  Matrix matrix;
  Matrix left_orthonormal;
  Index rank = 0;
};

struct SmoothnessConfig {
  Index n_basis = 7;
  int degree = 3;
  bool gap_aware = true;
};

/// Value at t of basis function i of degree d, by the knot recursion
///   m_{i,d}(t) = (t−β_i)/(β_{i+d}−β_i)·m_{i,d−1}(t)
///              + (β_{i+d+1}−t)/(β_{i+d+1}−β_{i+1})·m_{i+1,d−1}(t)
/// with m_{i,0} the indicator of [β_i, β_{i+1}). Terms whose denominator is
/// zero contribute zero. The last non-empty knot interval is closed on the
/// right so t equal to the final knot is covered.
double eval_basis(const SplineBasis& basis, Index i, int d, double t);

/// Builds the knot vector and M_k for one slice.
///
/// Evaluation points are the visit days (gap-aware) or the row indices
/// 0..I_k-1. Knots: the first point repeated d+1 times, l−d−1 interior knots
/// evenly spaced over the point range, the last point repeated d+1 times.
/// Throws ValidationError when l < d+1, l > I_k, the point range is
/// degenerate, or gap-aware construction lacks visit days.
struct SliceBasis {
  SplineBasis basis;
  SliceBasisMatrix matrix;
};
SliceBasis build_basis(Index n_rows, std::span<const std::int64_t> visit_days, const SmoothnessConfig& cfg);

/// C_kᵀ·X_k as a dense rank×J matrix, O(nnz·rank).
Matrix project_slice(const SliceBasisMatrix& sbm, const SparseSlice& slice, Index n_cols);

}  // namespace pf2
