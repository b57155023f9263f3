#pragma once

#include "pf2/model.hpp"
#include "pf2/types.hpp"

#include <filesystem>
#include <vector>

namespace pf2::io {

// Dense matrix text format:
//   %%Matrix rows cols
//   one line per row, whitespace-separated, 17 significant digits
void write_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix(const std::filesystem::path& path);

// A list of per-slice matrices sharing a column count is written as one
// stacked `<stem>.mtx` plus `<stem>.index`:
//   %%SliceIndex K
//   k offset rows cols   (one line per slice; narrower blocks are zero-padded)
void write_stacked(const std::filesystem::path& dir, const std::string& stem, const std::vector<Matrix>& blocks);
std::vector<Matrix> read_stacked(const std::filesystem::path& dir, const std::string& stem);

// Model directory: H.mtx, W.mtx, V.mtx, Q.{mtx,index}; C.{mtx,index} for
// smooth fits; U.{mtx,index} when emit_u is set (output only).
void write_model(const std::filesystem::path& dir, const Parafac2Model& model, bool emit_u = false);
Parafac2Model read_model(const std::filesystem::path& dir);

}  // namespace pf2::io
