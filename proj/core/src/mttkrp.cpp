#include "pf2/mttkrp.hpp"

#include "pf2/errors.hpp"
#include "pf2/parallel.hpp"

#include <string>

namespace pf2 {

Index SliceOperand::rows() const noexcept {
  return std::visit([](const auto* p) -> Index { return p->rows(); }, data_);
}

Matrix SliceOperand::times(const Matrix& b) const {
  if (const auto* s = std::get_if<const SparseSlice*>(&data_)) return (*s)->times(b);
  const Matrix& d = *std::get<const Matrix*>(data_);
  if (d.cols() != b.rows()) throw ShapeError("slice times: operand row mismatch");
  return d * b;
}

Matrix SliceOperand::transpose_times(const Matrix& b, Index n_cols) const {
  if (const auto* s = std::get_if<const SparseSlice*>(&data_)) return (*s)->transpose_times(b, n_cols);
  const Matrix& d = *std::get<const Matrix*>(data_);
  if (d.rows() != b.rows() || d.cols() != n_cols) throw ShapeError("slice transpose_times: shape mismatch");
  return d.transpose() * b;
}

double SliceOperand::frobenius_norm_sq() const {
  if (const auto* s = std::get_if<const SparseSlice*>(&data_)) return (*s)->frobenius_norm_sq();
  return std::get<const Matrix*>(data_)->squaredNorm();
}

std::vector<SliceOperand> operands_of(const IrregularTensor& tensor) {
  std::vector<SliceOperand> out;
  out.reserve(tensor.slices().size());
  for (const auto& s : tensor.slices()) out.emplace_back(s);
  return out;
}

ImplicitY::ImplicitY(std::span<const SliceOperand> slices, std::span<const Matrix> q, Index n_cols)
    : slices_(slices), q_(q), n_cols_(n_cols) {
  if (slices.size() != q.size()) throw ShapeError("implicit Y: slice and Q counts differ");
  rank_ = q.empty() ? 0 : q.front().cols();
  for (std::size_t k = 0; k < q.size(); ++k) {
    if (q[k].cols() != rank_ || q[k].rows() != slices[k].rows()) {
      throw ShapeError("implicit Y: Q_" + std::to_string(k) + " is " + std::to_string(q[k].rows()) + "x" +
                       std::to_string(q[k].cols()) + ", slice has " + std::to_string(slices[k].rows()) + " rows");
    }
  }
}

namespace {

void check_factors(const ImplicitY& y, const Matrix& h, const Matrix& w, const Matrix& v) {
  const Index r = y.rank();
  if (h.rows() != r || h.cols() != r) throw ShapeError("mttkrp: H must be RxR");
  if (w.rows() != y.n_slices() || w.cols() != r) throw ShapeError("mttkrp: W must be KxR");
  if (v.rows() != y.n_cols() || v.cols() != r) throw ShapeError("mttkrp: V must be JxR");
}

// Contribution of slice k to the summed modes (H, V).
Matrix slice_contribution(const ImplicitY& y, Index k, Mode mode, const Matrix& h, const Matrix& w, const Matrix& v) {
  const Matrix& q = y.q(k);
  if (mode == Mode::H) {
    // (Q_kᵀ·(X_k·V))·diag(W(k,:))
    Matrix t = q.transpose() * y.slice(k).times(v);
    return t * w.row(k).asDiagonal();
  }
  // X_kᵀ·((Q_k·H)·diag(W(k,:)))
  const Matrix qh = (q * h) * w.row(k).asDiagonal();
  return y.slice(k).transpose_times(qh, y.n_cols());
}

}  // namespace

Matrix slicewise_mttkrp(const ImplicitY& y, Mode mode, const Matrix& h, const Matrix& w, const Matrix& v,
                        const ReductionPolicy& policy) {
  check_factors(y, h, w, v);
  const Index r = y.rank();
  const auto n_slices = static_cast<std::size_t>(y.n_slices());
  Matrix f;

  if (mode == Mode::W) {
    // Rows are independent per slice; no reduction needed.
    f = Matrix::Zero(y.n_slices(), r);
    parallel_for(n_slices, policy.threads, [&](std::size_t ks) {
      const auto k = static_cast<Index>(ks);
      const Matrix t = y.q(k).transpose() * y.slice(k).times(v);
      f.row(k) = h.cwiseProduct(t).colwise().sum();
    });
  } else {
    const Index out_rows = mode == Mode::H ? r : y.n_cols();
    f = Matrix::Zero(out_rows, r);
    if (effective_workers(n_slices, policy.threads) == 1) {
      // Same summation order as the stored partials below, without storing them.
      for (std::size_t k = 0; k < n_slices; ++k) f += slice_contribution(y, static_cast<Index>(k), mode, h, w, v);
    } else if (policy.deterministic) {
      std::vector<Matrix> partial(n_slices);
      parallel_for(n_slices, policy.threads, [&](std::size_t k) {
        partial[k] = slice_contribution(y, static_cast<Index>(k), mode, h, w, v);
      });
      for (const auto& p : partial) f += p;
    } else {
      const int workers = effective_workers(n_slices, policy.threads);
      std::vector<Matrix> partial(static_cast<std::size_t>(workers), Matrix::Zero(out_rows, r));
      parallel_blocks(n_slices, policy.threads, [&](std::size_t begin, std::size_t end, int worker) {
        Matrix& acc = partial[static_cast<std::size_t>(worker)];
        for (std::size_t k = begin; k < end; ++k) acc += slice_contribution(y, static_cast<Index>(k), mode, h, w, v);
      });
      for (const auto& p : partial) f += p;
    }
  }
  if (!f.allFinite()) throw NumericalError("mttkrp: non-finite accumulation in mode " + std::string(mode_name(mode)));
  return f;
}

}  // namespace pf2
