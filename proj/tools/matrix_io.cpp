#include "matrix_io.hpp"

#include "pf2/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace pf2::io {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) tokens.push_back(tok);
  return tokens;
}

template <typename T>
T parse_number(const std::string& tok, const std::string& source, std::size_t line) {
  T value{};
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError(source, line, "invalid number '" + tok + "'");
  }
  return value;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace

void write_matrix(const std::filesystem::path& path, const Matrix& m) {
  auto out = open_out(path);
  out << "%%Matrix " << m.rows() << ' ' << m.cols() << '\n';
  char buf[40];
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      if (j) out << ' ';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw Error("write failed for " + path.string());
}

Matrix read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  const std::string src = path.string();
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> tok;
  while (tok.empty() && std::getline(in, line)) {
    ++line_no;
    tok = split(line);
  }
  if (tok.size() != 3 || tok[0] != "%%Matrix") throw ParseError(src, line_no, "expected '%%Matrix rows cols'");
  const auto rows = parse_number<Index>(tok[1], src, line_no);
  const auto cols = parse_number<Index>(tok[2], src, line_no);
  if (rows < 0 || cols < 0) throw ParseError(src, line_no, "negative dimension");
  Matrix m(rows, cols);
  Index i = 0;
  while (std::getline(in, line)) {
    ++line_no;
    tok = split(line);
    if (tok.empty()) continue;
    if (i >= rows) throw ParseError(src, line_no, "more than " + std::to_string(rows) + " rows");
    if (static_cast<Index>(tok.size()) != cols) {
      throw ParseError(src, line_no, "expected " + std::to_string(cols) + " values, got " + std::to_string(tok.size()));
    }
    for (Index j = 0; j < cols; ++j) m(i, j) = parse_number<double>(tok[static_cast<std::size_t>(j)], src, line_no);
    ++i;
  }
  if (i != rows) throw ParseError(src, line_no, "expected " + std::to_string(rows) + " rows, got " + std::to_string(i));
  return m;
}

void write_stacked(const std::filesystem::path& dir, const std::string& stem, const std::vector<Matrix>& blocks) {
  Index total = 0;
  Index cols = 0;
  for (const auto& b : blocks) {
    total += b.rows();
    cols = std::max(cols, b.cols());
  }
  // Narrower blocks are zero-padded; the index records their true width.
  Matrix stacked = Matrix::Zero(total, cols);
  auto index = open_out(dir / (stem + ".index"));
  index << "%%SliceIndex " << blocks.size() << '\n';
  Index offset = 0;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    stacked.block(offset, 0, blocks[k].rows(), blocks[k].cols()) = blocks[k];
    index << k << ' ' << offset << ' ' << blocks[k].rows() << ' ' << blocks[k].cols() << '\n';
    offset += blocks[k].rows();
  }
  if (!index) throw Error("write failed for " + (dir / (stem + ".index")).string());
  write_matrix(dir / (stem + ".mtx"), stacked);
}

std::vector<Matrix> read_stacked(const std::filesystem::path& dir, const std::string& stem) {
  const Matrix stacked = read_matrix(dir / (stem + ".mtx"));
  const auto index_path = dir / (stem + ".index");
  std::ifstream in(index_path);
  if (!in) throw Error("cannot open " + index_path.string());
  const std::string src = index_path.string();
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> tok;
  while (tok.empty() && std::getline(in, line)) {
    ++line_no;
    tok = split(line);
  }
  if (tok.size() != 2 || tok[0] != "%%SliceIndex") throw ParseError(src, line_no, "expected '%%SliceIndex K'");
  const auto n = parse_number<std::size_t>(tok[1], src, line_no);
  std::vector<Matrix> blocks;
  blocks.reserve(n);
  while (std::getline(in, line)) {
    ++line_no;
    tok = split(line);
    if (tok.empty()) continue;
    if (tok.size() != 3 && tok.size() != 4) throw ParseError(src, line_no, "expected 'k offset rows [cols]'");
    const auto k = parse_number<std::size_t>(tok[0], src, line_no);
    const auto offset = parse_number<Index>(tok[1], src, line_no);
    const auto rows = parse_number<Index>(tok[2], src, line_no);
    const Index cols = tok.size() == 4 ? parse_number<Index>(tok[3], src, line_no) : stacked.cols();
    if (k != blocks.size()) throw ParseError(src, line_no, "slice entries out of order");
    if (offset < 0 || rows < 0 || offset + rows > stacked.rows() || cols < 0 || cols > stacked.cols()) {
      throw ParseError(src, line_no, "block exceeds the stacked " + std::to_string(stacked.rows()) + "x" +
                                         std::to_string(stacked.cols()) + " matrix");
    }
    blocks.push_back(stacked.block(offset, 0, rows, cols));
  }
  if (blocks.size() != n) throw ParseError(src, line_no, "expected " + std::to_string(n) + " slice entries");
  return blocks;
}

void write_model(const std::filesystem::path& dir, const Parafac2Model& model, bool emit_u) {
  std::filesystem::create_directories(dir);
  write_matrix(dir / "H.mtx", model.h);
  write_matrix(dir / "W.mtx", model.w);
  write_matrix(dir / "V.mtx", model.v);
  write_stacked(dir, "Q", model.q);
  if (model.smooth()) write_stacked(dir, "C", model.projectors);
  if (emit_u) {
    std::vector<Matrix> u;
    u.reserve(model.q.size());
    for (Index k = 0; k < static_cast<Index>(model.q.size()); ++k) u.push_back(model.u(k));
    write_stacked(dir, "U", u);
  }
}

Parafac2Model read_model(const std::filesystem::path& dir) {
  Parafac2Model model;
  model.h = read_matrix(dir / "H.mtx");
  model.w = read_matrix(dir / "W.mtx");
  model.v = read_matrix(dir / "V.mtx");
  model.q = read_stacked(dir, "Q");
  if (std::filesystem::exists(dir / "C.mtx")) model.projectors = read_stacked(dir, "C");

  const Index r = model.h.cols();
  if (model.h.rows() != r || model.w.cols() != r || model.v.cols() != r) {
    throw ShapeError("model " + dir.string() + ": H, W, V disagree on rank");
  }
  if (static_cast<Index>(model.q.size()) != model.w.rows()) {
    throw ShapeError("model " + dir.string() + ": Q has " + std::to_string(model.q.size()) + " slices, W has " +
                     std::to_string(model.w.rows()) + " rows");
  }
  for (std::size_t k = 0; k < model.q.size(); ++k) {
    if (model.q[k].cols() != r) throw ShapeError("model " + dir.string() + ": Q_" + std::to_string(k) + " rank mismatch");
    if (model.smooth() && (model.projectors.size() != model.q.size() ||
                           model.projectors[k].cols() != model.q[k].rows())) {
      throw ShapeError("model " + dir.string() + ": C_" + std::to_string(k) + " does not match Q_" + std::to_string(k));
    }
  }
  return model;
}

}  // namespace pf2::io
