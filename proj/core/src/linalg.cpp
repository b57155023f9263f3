#include "pf2/linalg.hpp"

#include "pf2/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <string>

namespace pf2 {

namespace {

constexpr double kGramConditionLimit = 1e7;
constexpr double kGramOrthoTolerance = 1e-12;
constexpr double kRankTolerance = 1e-12;

ThinSvd direct_svd(const Matrix& a, Index r) {
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.matrixU().leftCols(r), svd.singularValues().head(r), svd.matrixV().leftCols(r)};
}

// Eigen-decomposition of AᵀA for tall A. Returns false when the Gram route
// would lose too much accuracy for the requested rank.
bool gram_svd(const Matrix& a, Index r, ThinSvd& out) {
  const Matrix gram = a.transpose() * a;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success) return false;
  const Index n = a.cols();
  // Eigenvalues come ascending; take the top r in descending order.
  Vector sigma(r);
  Matrix right(n, r);
  for (Index c = 0; c < r; ++c) {
    const double lambda = eig.eigenvalues()(n - 1 - c);
    sigma(c) = std::sqrt(std::max(lambda, 0.0));
    right.col(c) = eig.eigenvectors().col(n - 1 - c);
  }
  if (!(sigma(r - 1) > 0.0) || sigma(0) / sigma(r - 1) > kGramConditionLimit) return false;
  Matrix left = a * right;
  for (Index c = 0; c < r; ++c) left.col(c) /= sigma(c);
  const double ortho_err =
      (left.transpose() * left - Matrix::Identity(r, r)).cwiseAbs().maxCoeff();
  if (ortho_err > kGramOrthoTolerance) return false;
  out = {std::move(left), std::move(sigma), std::move(right)};
  return true;
}

// Extends the orthonormal columns of `basis` to `target` columns using
// standard basis vectors as candidates (two rounds of Gram-Schmidt).
Matrix complete_orthonormal(const Matrix& basis, Index target) {
  const Index m = basis.rows();
  Matrix out(m, target);
  Index filled = basis.cols();
  out.leftCols(filled) = basis;
  for (Index e = 0; e < m && filled < target; ++e) {
    Vector v = Vector::Unit(m, e);
    for (int pass = 0; pass < 2; ++pass) {
      v -= out.leftCols(filled) * (out.leftCols(filled).transpose() * v);
    }
    const double norm = v.norm();
    if (norm > 0.5) out.col(filled++) = v / norm;
  }
  return out;
}

}  // namespace

ThinSvd thin_svd(const Matrix& a, Index r) {
  if (!a.allFinite()) throw NumericalError("thin_svd: non-finite input");
  if (r < 1 || r > std::min(a.rows(), a.cols())) {
    throw ShapeError("thin_svd: rank " + std::to_string(r) + " outside [1, min(m, n)]");
  }
  if (a.rows() >= 4 * a.cols()) {
    ThinSvd out;
    if (gram_svd(a, r, out)) return out;
  }
  return direct_svd(a, r);
}

PolarFactor orthonormal_polar(const Matrix& a) {
  const Index r = a.cols();
  if (r < 1 || a.rows() < r) throw ShapeError("orthonormal_polar: need rows >= cols >= 1");
  ThinSvd svd = thin_svd(a, r);
  const double sigma_max = svd.singular_values(0);
  Index kept = 0;
  while (kept < r && svd.singular_values(kept) > kRankTolerance * sigma_max) ++kept;
  if (kept == r) return {svd.left * svd.right.transpose(), false};

  // Deficient: recompute directly so `right` is a full orthogonal basis, then
  // complete the left singular subspace.
  svd = direct_svd(a, r);
  const Matrix left = complete_orthonormal(svd.left.leftCols(kept), r);
  return {left * svd.right.transpose(), true};
}

CholeskyFactor CholeskyFactor::factor(const Matrix& spd) {
  if (spd.rows() != spd.cols()) throw ShapeError("cholesky: matrix not square");
  if (!spd.allFinite()) throw NumericalError("cholesky: non-finite input");
  const Index n = spd.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    double pivot = spd(j, j) - l.row(j).head(j).squaredNorm();
    if (!(pivot > 0.0)) throw CholeskyError(j + 1, pivot);
    const double d = std::sqrt(pivot);
    l(j, j) = d;
    for (Index i = j + 1; i < n; ++i) {
      l(i, j) = (spd(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / d;
    }
  }
  return CholeskyFactor(std::move(l));
}

Matrix CholeskyFactor::solve(const Matrix& rhs) const {
  if (rhs.rows() != lower_.rows()) throw ShapeError("cholesky solve: rhs row mismatch");
  Matrix x = lower_.triangularView<Eigen::Lower>().solve(rhs);
  lower_.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

Matrix spd_solve(const Matrix& g, double rho, const Matrix& rhs) {
  if (!(rho > 0.0)) throw ValidationError("spd_solve: rho must be positive");
  if (g.rows() != g.cols() || rhs.rows() != g.rows()) throw ShapeError("spd_solve: shape mismatch");
  const Matrix shifted = g + rho * Matrix::Identity(g.rows(), g.cols());
  return CholeskyFactor::factor(shifted).solve(rhs);
}

Matrix gram_hadamard(std::span<const Matrix> factors, std::size_t skip) {
  if (factors.empty()) throw ShapeError("gram_hadamard: no factors");
  const Index r = factors.front().cols();
  Matrix g = Matrix::Ones(r, r);
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (factors[i].cols() != r) throw ShapeError("gram_hadamard: column count mismatch");
    if (i == skip) continue;
    g.array() *= (factors[i].transpose() * factors[i]).array();
  }
  return g;
}

Matrix naive_khatri_rao(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("khatri_rao: column count mismatch");
  Matrix out(a.rows() * b.rows(), a.cols());
  for (Index r = 0; r < a.cols(); ++r) {
    for (Index i = 0; i < a.rows(); ++i) {
      for (Index j = 0; j < b.rows(); ++j) out(i * b.rows() + j, r) = a(i, r) * b(j, r);
    }
  }
  return out;
}

}  // namespace pf2
