#pragma once

#include "pf2/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace pf2 {

struct Entry {
  Index row = 0;
  Index col = 0;
  double value = 0.0;

  friend bool operator==(const Entry&, const Entry&) = default;
};

using VisitDays = std::vector<std::int64_t>;

/// One irregular slice X_k stored in coordinate form.
///
/// Entries are kept sorted by (row, col). The constructor rejects duplicate
/// coordinates, rows outside [0, rows), and visit-day vectors that are not
/// strictly increasing, non-negative, and of length rows. Column bounds are
/// owned by the parent tensor.
class SparseSlice {
 public:
  SparseSlice() = default;
  SparseSlice(Index rows, std::vector<Entry> entries, std::optional<VisitDays> visit_days = std::nullopt);

  Index rows() const noexcept { return rows_; }
  std::size_t nnz() const noexcept { return entries_.size(); }
  std::span<const Entry> entries() const noexcept { return entries_; }

  bool has_visit_days() const noexcept { return visit_days_.has_value(); }
  const std::optional<VisitDays>& visit_days() const noexcept { return visit_days_; }
  void set_visit_days(std::optional<VisitDays> days);

  double frobenius_norm_sq() const noexcept;

  /// X·B for dense B with n_cols rows.
  Matrix times(const Matrix& b) const;
  /// Xᵀ·B for dense B with rows() rows; the result has n_cols rows.
  Matrix transpose_times(const Matrix& b, Index n_cols) const;
  Matrix to_dense(Index n_cols) const;

  friend bool operator==(const SparseSlice&, const SparseSlice&) = default;

 private:
  Index rows_ = 0;
  std::vector<Entry> entries_;
  std::optional<VisitDays> visit_days_;
};

/// K sparse slices sharing J columns.
class IrregularTensor {
 public:
  IrregularTensor() = default;
  IrregularTensor(Index n_cols, std::vector<SparseSlice> slices);

  Index n_slices() const noexcept { return static_cast<Index>(slices_.size()); }
  Index n_cols() const noexcept { return n_cols_; }
  std::size_t nnz() const noexcept;

  const SparseSlice& slice(Index k) const { return slices_.at(static_cast<std::size_t>(k)); }
  std::span<const SparseSlice> slices() const noexcept { return slices_; }

  /// True when every slice carries visit days.
  bool has_visit_days() const noexcept;

  friend bool operator==(const IrregularTensor&, const IrregularTensor&) = default;

 private:
  Index n_cols_ = 0;
  std::vector<SparseSlice> slices_;
};

/// Σ_k ‖X_k‖_F².
double frobenius_norm_sq(const IrregularTensor& tensor);

/// Sidecar path holding visit days for a tensor file: same stem, `.days`.
std::filesystem::path timestamps_path_for(const std::filesystem::path& tensor_path);

/// Reads the `%%IrregularTensor K J NNZ` text format. Visit days are read
/// from `days_path` when given, else from the `.days` sidecar if it exists.
/// Throws ParseError (with line number) on malformed content.
IrregularTensor load_irregular_tensor(const std::filesystem::path& path,
                                      const std::optional<std::filesystem::path>& days_path = std::nullopt);

/// Writes the tensor and, if every slice has visit days, the `.days` sidecar.
/// Values are written with 17 significant digits so a reload is bit-exact.
void save_irregular_tensor(const IrregularTensor& tensor, const std::filesystem::path& path);

}  // namespace pf2
