#include "pf2/spline.hpp"

#include "pf2/errors.hpp"
#include "pf2/linalg.hpp"

#include <string>

namespace pf2 {

namespace {

constexpr double kBasisRankTolerance = 1e-10;

double indicator(const std::vector<double>& knots, Index i, double t) {
  const double lo = knots[static_cast<std::size_t>(i)];
  const double hi = knots[static_cast<std::size_t>(i) + 1];
  if (lo <= t && t < hi) return 1.0;
  const double last = knots.back();
  return (t == last && lo < hi && hi == last) ? 1.0 : 0.0;
}

double recurse(const std::vector<double>& b, Index i, int d, double t) {
  if (d == 0) return indicator(b, i, t);
  const auto at = [&](Index n) { return b[static_cast<std::size_t>(n)]; };
  double value = 0.0;
  const double left_den = at(i + d) - at(i);
  if (left_den != 0.0) value += (t - at(i)) / left_den * recurse(b, i, d - 1, t);
  const double right_den = at(i + d + 1) - at(i + 1);
  if (right_den != 0.0) value += (at(i + d + 1) - t) / right_den * recurse(b, i + 1, d - 1, t);
  return value;
}

}  // namespace

double eval_basis(const SplineBasis& basis, Index i, int d, double t) {
  const auto m = static_cast<Index>(basis.knots.size());
  if (d < 0 || i < 0 || i + d + 1 >= m) {
    throw ShapeError("eval_basis: index " + std::to_string(i) + " with degree " + std::to_string(d) +
                     " needs knots beyond the " + std::to_string(m) + " available");
  }
  return recurse(basis.knots, i, d, t);
}

SliceBasis build_basis(Index n_rows, std::span<const std::int64_t> visit_days, const SmoothnessConfig& cfg) {
  const Index l = cfg.n_basis;
  const int d = cfg.degree;
  if (d < 0) throw ValidationError("spline degree must be non-negative");
  if (l < d + 1) {
    throw ValidationError("spline: need at least degree+1 = " + std::to_string(d + 1) + " basis functions");
  }
  if (l > n_rows) {
    throw ValidationError("spline: " + std::to_string(l) + " basis functions exceed the slice's " +
                          std::to_string(n_rows) + " rows");
  }

  Vector points(n_rows);
  if (cfg.gap_aware) {
    if (static_cast<Index>(visit_days.size()) != n_rows) {
      throw ValidationError("spline: gap-aware basis needs one visit day per row");
    }
    for (Index i = 0; i < n_rows; ++i) points(i) = static_cast<double>(visit_days[static_cast<std::size_t>(i)]);
  } else {
    for (Index i = 0; i < n_rows; ++i) points(i) = static_cast<double>(i);
  }
  const double lo = points.minCoeff();
  const double hi = points.maxCoeff();
  if (!(hi > lo)) throw ValidationError("spline: evaluation points span an empty range");

  SplineBasis basis;
  basis.degree = d;
  basis.n_basis = l;
  basis.knots.assign(static_cast<std::size_t>(d + 1), lo);
  const Index interior = l - d - 1;
  for (Index q = 1; q <= interior; ++q) {
    basis.knots.push_back(lo + (hi - lo) * static_cast<double>(q) / static_cast<double>(interior + 1));
  }
  basis.knots.insert(basis.knots.end(), static_cast<std::size_t>(d + 1), hi);

  SliceBasisMatrix sbm;
  sbm.matrix.resize(n_rows, l);
  for (Index i = 0; i < n_rows; ++i) {
    for (Index j = 0; j < l; ++j) sbm.matrix(i, j) = eval_basis(basis, j, d, points(i));
  }

  const ThinSvd svd = thin_svd(sbm.matrix, l);
  Index rank = 0;
  while (rank < l && svd.singular_values(rank) > kBasisRankTolerance * svd.singular_values(0)) ++rank;
  sbm.rank = rank;
  sbm.left_orthonormal = svd.left.leftCols(rank);
  return {std::move(basis), std::move(sbm)};
}

Matrix project_slice(const SliceBasisMatrix& sbm, const SparseSlice& slice, Index n_cols) {
  if (sbm.left_orthonormal.rows() != slice.rows()) throw ShapeError("project_slice: basis rows != slice rows");
  const Matrix ct = sbm.left_orthonormal.transpose();
  Matrix out = Matrix::Zero(ct.rows(), n_cols);
  for (const Entry& e : slice.entries()) out.col(e.col).noalias() += e.value * ct.col(e.row);
  return out;
}

}  // namespace pf2
