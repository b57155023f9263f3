#include "pf2/tensor.hpp"

#include "pf2/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace pf2 {

namespace {

void check_visit_days(const VisitDays& days, Index rows) {
  if (static_cast<Index>(days.size()) != rows) {
    throw ValidationError("visit days: expected " + std::to_string(rows) + " values, got " +
                          std::to_string(days.size()));
  }
  for (std::size_t i = 0; i < days.size(); ++i) {
    if (days[i] < 0) throw ValidationError("visit days: negative day at row " + std::to_string(i));
    if (i > 0 && days[i] <= days[i - 1]) {
      throw ValidationError("visit days: not strictly increasing at row " + std::to_string(i));
    }
  }
}

bool entry_less(const Entry& a, const Entry& b) {
  return a.row != b.row ? a.row < b.row : a.col < b.col;
}

}  // namespace

SparseSlice::SparseSlice(Index rows, std::vector<Entry> entries, std::optional<VisitDays> visit_days)
    : rows_(rows), entries_(std::move(entries)) {
  if (rows_ < 0) throw ValidationError("slice: negative row count");
  std::sort(entries_.begin(), entries_.end(), entry_less);
  for (std::size_t n = 0; n < entries_.size(); ++n) {
    const Entry& e = entries_[n];
    if (e.row < 0 || e.row >= rows_) {
      throw ValidationError("slice: row index " + std::to_string(e.row) + " outside [0, " +
                            std::to_string(rows_) + ")");
    }
    if (e.col < 0) throw ValidationError("slice: negative column index");
    if (n > 0 && entries_[n - 1].row == e.row && entries_[n - 1].col == e.col) {
      throw ValidationError("slice: duplicate coordinate (" + std::to_string(e.row) + ", " +
                            std::to_string(e.col) + ")");
    }
  }
  set_visit_days(std::move(visit_days));
}

void SparseSlice::set_visit_days(std::optional<VisitDays> days) {
  if (days) check_visit_days(*days, rows_);
  visit_days_ = std::move(days);
}

double SparseSlice::frobenius_norm_sq() const noexcept {
  double sum = 0.0;
  for (const Entry& e : entries_) sum += e.value * e.value;
  return sum;
}

Matrix SparseSlice::times(const Matrix& b) const {
  Matrix out = Matrix::Zero(rows_, b.cols());
  for (const Entry& e : entries_) out.row(e.row).noalias() += e.value * b.row(e.col);
  return out;
}

Matrix SparseSlice::transpose_times(const Matrix& b, Index n_cols) const {
  if (b.rows() != rows_) throw ShapeError("slice transpose_times: operand row mismatch");
  Matrix out = Matrix::Zero(n_cols, b.cols());
  for (const Entry& e : entries_) out.row(e.col).noalias() += e.value * b.row(e.row);
  return out;
}

Matrix SparseSlice::to_dense(Index n_cols) const {
  Matrix dense = Matrix::Zero(rows_, n_cols);
  for (const Entry& e : entries_) dense(e.row, e.col) = e.value;
  return dense;
}

IrregularTensor::IrregularTensor(Index n_cols, std::vector<SparseSlice> slices)
    : n_cols_(n_cols), slices_(std::move(slices)) {
  if (n_cols_ < 0) throw ValidationError("tensor: negative column count");
  for (std::size_t k = 0; k < slices_.size(); ++k) {
    for (const Entry& e : slices_[k].entries()) {
      if (e.col >= n_cols_) {
        throw ValidationError("tensor: slice " + std::to_string(k) + " column index " +
                              std::to_string(e.col) + " outside [0, " + std::to_string(n_cols_) + ")");
      }
    }
  }
}

std::size_t IrregularTensor::nnz() const noexcept {
  std::size_t total = 0;
  for (const auto& s : slices_) total += s.nnz();
  return total;
}

bool IrregularTensor::has_visit_days() const noexcept {
  return !slices_.empty() &&
         std::all_of(slices_.begin(), slices_.end(), [](const SparseSlice& s) { return s.has_visit_days(); });
}

double frobenius_norm_sq(const IrregularTensor& tensor) {
  double sum = 0.0;
  for (const auto& s : tensor.slices()) sum += s.frobenius_norm_sq();
  return sum;
}

std::filesystem::path timestamps_path_for(const std::filesystem::path& tensor_path) {
  auto days = tensor_path;
  days.replace_extension(".days");
  return days;
}

namespace {

// Whitespace tokenizer that remembers the line it came from.
class LineReader {
 public:
  LineReader(const std::filesystem::path& path) : path_(path.string()), in_(path) {
    if (!in_) throw Error("cannot open " + path_);
  }

  // Next non-blank line split into tokens; false at EOF.
  bool next(std::vector<std::string>& tokens) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      tokens.clear();
      std::istringstream ss(line);
      std::string tok;
      while (ss >> tok) tokens.push_back(tok);
      if (!tokens.empty()) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(path_, line_no_, what); }

  template <typename T>
  T number(const std::string& tok, const char* field) const {
    T value{};
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) fail(std::string("invalid ") + field + " '" + tok + "'");
    return value;
  }

  std::size_t line() const noexcept { return line_no_; }

 private:
  std::string path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

struct RawEntry {
  Entry entry;
  std::size_t line;
};

std::vector<VisitDays> load_days(const std::filesystem::path& path, const std::vector<Index>& rows) {
  LineReader reader(path);
  std::vector<std::map<Index, std::pair<std::int64_t, std::size_t>>> seen(rows.size());
  std::vector<std::string> tok;
  while (reader.next(tok)) {
    if (tok.size() != 3) reader.fail("expected 'k i t'");
    const auto k = reader.number<Index>(tok[0], "slice index");
    const auto i = reader.number<Index>(tok[1], "row index");
    const auto t = reader.number<std::int64_t>(tok[2], "day");
    if (k < 0 || k >= static_cast<Index>(rows.size())) reader.fail("slice index " + tok[0] + " out of range");
    if (i < 0 || i >= rows[static_cast<std::size_t>(k)]) reader.fail("row index " + tok[1] + " out of range");
    if (t < 0) reader.fail("negative day " + tok[2]);
    if (!seen[static_cast<std::size_t>(k)].emplace(i, std::pair{t, reader.line()}).second) {
      reader.fail("duplicate day for slice " + tok[0] + " row " + tok[1]);
    }
  }
  std::vector<VisitDays> days(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (static_cast<Index>(seen[k].size()) != rows[k]) {
      throw ParseError(path.string(), reader.line(),
                       "slice " + std::to_string(k) + " has " + std::to_string(seen[k].size()) + " days for " +
                           std::to_string(rows[k]) + " rows");
    }
    std::int64_t prev = -1;
    for (const auto& [i, day_line] : seen[k]) {
      if (day_line.first <= prev) {
        throw ParseError(path.string(), day_line.second,
                         "days of slice " + std::to_string(k) + " not strictly increasing at row " +
                             std::to_string(i));
      }
      prev = day_line.first;
      days[k].push_back(day_line.first);
    }
  }
  return days;
}

}  // namespace

IrregularTensor load_irregular_tensor(const std::filesystem::path& path,
                                      const std::optional<std::filesystem::path>& days_path) {
  LineReader reader(path);
  std::vector<std::string> tok;
  if (!reader.next(tok) || tok.size() != 4 || tok[0] != "%%IrregularTensor") {
    reader.fail("expected header '%%IrregularTensor K J NNZ'");
  }
  const auto n_slices = reader.number<Index>(tok[1], "K");
  const auto n_cols = reader.number<Index>(tok[2], "J");
  const auto nnz = reader.number<std::size_t>(tok[3], "NNZ");
  if (n_slices < 0 || n_cols < 0) reader.fail("negative dimension in header");

  const auto K = static_cast<std::size_t>(n_slices);
  std::vector<std::optional<Index>> declared_rows(K);
  std::vector<Index> max_row(K, -1);
  std::vector<std::vector<RawEntry>> raw(K);
  std::size_t n_entries = 0;

  while (reader.next(tok)) {
    if (tok[0] == "%%rows") {
      if (tok.size() != 3) reader.fail("expected '%%rows k I_k'");
      const auto k = reader.number<Index>(tok[1], "slice index");
      const auto rows = reader.number<Index>(tok[2], "row count");
      if (k < 0 || k >= n_slices) reader.fail("slice index " + tok[1] + " out of range");
      if (rows < 0) reader.fail("negative row count");
      const auto ks = static_cast<std::size_t>(k);
      if (declared_rows[ks]) reader.fail("repeated %%rows directive for slice " + tok[1]);
      if (!raw[ks].empty()) reader.fail("%%rows directive for slice " + tok[1] + " follows its entries");
      declared_rows[ks] = rows;
      continue;
    }
    if (tok.size() != 4) reader.fail("expected 'k i j v'");
    if (n_entries == nnz) reader.fail("more entries than the declared NNZ " + std::to_string(nnz));
    const auto k = reader.number<Index>(tok[0], "slice index");
    const auto i = reader.number<Index>(tok[1], "row index");
    const auto j = reader.number<Index>(tok[2], "column index");
    const auto v = reader.number<double>(tok[3], "value");
    if (k < 0 || k >= n_slices) reader.fail("slice index " + tok[0] + " out of bounds [0, " + std::to_string(n_slices) + ")");
    const auto ks = static_cast<std::size_t>(k);
    if (i < 0 || (declared_rows[ks] && i >= *declared_rows[ks])) {
      reader.fail("row index " + tok[1] + " out of bounds for slice " + tok[0]);
    }
    if (j < 0 || j >= n_cols) {
      reader.fail("column index " + tok[2] + " out of bounds [0, " + std::to_string(n_cols) + ")");
    }
    raw[ks].push_back({{i, j, v}, reader.line()});
    max_row[ks] = std::max(max_row[ks], i);
    ++n_entries;
  }
  if (n_entries != nnz) {
    throw ParseError(path.string(), reader.line(),
                     "declared NNZ " + std::to_string(nnz) + " but found " + std::to_string(n_entries) + " entries");
  }

  std::vector<Index> rows(K);
  for (std::size_t k = 0; k < K; ++k) rows[k] = declared_rows[k].value_or(max_row[k] + 1);

  std::vector<SparseSlice> slices;
  slices.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    auto& r = raw[k];
    std::stable_sort(r.begin(), r.end(), [](const RawEntry& a, const RawEntry& b) { return entry_less(a.entry, b.entry); });
    for (std::size_t n = 1; n < r.size(); ++n) {
      if (r[n].entry.row == r[n - 1].entry.row && r[n].entry.col == r[n - 1].entry.col) {
        throw ParseError(path.string(), r[n].line,
                         "duplicate coordinate (" + std::to_string(r[n].entry.row) + ", " +
                             std::to_string(r[n].entry.col) + ") in slice " + std::to_string(k) +
                             ", first seen on line " + std::to_string(r[n - 1].line));
      }
    }
    std::vector<Entry> entries;
    entries.reserve(r.size());
    for (const auto& e : r) entries.push_back(e.entry);
    slices.emplace_back(rows[k], std::move(entries));
  }

  const auto sidecar = days_path.value_or(timestamps_path_for(path));
  if (days_path || std::filesystem::exists(sidecar)) {
    auto days = load_days(sidecar, rows);
    for (std::size_t k = 0; k < K; ++k) slices[k].set_visit_days(std::move(days[k]));
  }
  return IrregularTensor(n_cols, std::move(slices));
}

void save_irregular_tensor(const IrregularTensor& tensor, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  char buf[64];
  out << "%%IrregularTensor " << tensor.n_slices() << ' ' << tensor.n_cols() << ' ' << tensor.nnz() << '\n';
  for (Index k = 0; k < tensor.n_slices(); ++k) out << "%%rows " << k << ' ' << tensor.slice(k).rows() << '\n';
  for (Index k = 0; k < tensor.n_slices(); ++k) {
    for (const Entry& e : tensor.slice(k).entries()) {
      std::snprintf(buf, sizeof buf, "%.17g", e.value);
      out << k << ' ' << e.row << ' ' << e.col << ' ' << buf << '\n';
    }
  }
  if (!out) throw Error("write failed for " + path.string());

  const auto days_path = timestamps_path_for(path);
  if (tensor.has_visit_days()) {
    std::ofstream days(days_path);
    if (!days) throw Error("cannot write " + days_path.string());
    for (Index k = 0; k < tensor.n_slices(); ++k) {
      const auto& d = *tensor.slice(k).visit_days();
      for (std::size_t i = 0; i < d.size(); ++i) days << k << ' ' << i << ' ' << d[i] << '\n';
    }
    if (!days) throw Error("write failed for " + days_path.string());
  } else if (std::filesystem::exists(days_path)) {
    // A stale sidecar would be attached on the next load.
    std::filesystem::remove(days_path);
  }
}

}  // namespace pf2
