#include "oracles.hpp"

#include "pf2/errors.hpp"
#include "pf2/mttkrp.hpp"

#include <gtest/gtest.h>

#include <limits>

namespace pf2 {
namespace {

struct Instance {
  IrregularTensor tensor;
  std::vector<Matrix> q;
  Matrix h, w, v;
};

Instance random_instance(std::mt19937_64& rng, Index k, Index rows_max, Index j, Index r) {
  Instance in;
  in.tensor = oracle::random_tensor(rng, k, j, r, rows_max, 0.4);
  for (const auto& s : in.tensor.slices()) in.q.push_back(oracle::random_orthonormal(rng, s.rows(), r));
  in.h = oracle::random_matrix(rng, r, r);
  in.w = oracle::random_matrix(rng, k, r);
  in.v = oracle::random_matrix(rng, j, r);
  return in;
}

double rel(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

constexpr Mode kModes[] = {Mode::H, Mode::W, Mode::V};

TEST(Mttkrp, ZeroTensorGivesZero) {
  std::vector<SparseSlice> slices;
  for (int k = 0; k < 3; ++k) slices.emplace_back(4, std::vector<Entry>{});
  const IrregularTensor t(5, std::move(slices));
  std::mt19937_64 rng(1);
  std::vector<Matrix> q;
  for (int k = 0; k < 3; ++k) q.push_back(oracle::random_orthonormal(rng, 4, 2));
  const auto ops = operands_of(t);
  const ImplicitY y(ops, q, 5);
  for (Mode m : kModes) {
    const Matrix f = slicewise_mttkrp(y, m, oracle::random_matrix(rng, 2, 2), oracle::random_matrix(rng, 3, 2),
                                      oracle::random_matrix(rng, 5, 2));
    EXPECT_EQ(f.norm(), 0.0) << mode_name(m);
  }
}

TEST(Mttkrp, RankOneModeWIsEntrySum) {
  const Matrix x = (Matrix(2, 2) << 1, 2, 3, 4).finished();
  std::vector<SparseSlice> slices;
  slices.emplace_back(2, std::vector<Entry>{{0, 0, 1}, {0, 1, 2}, {1, 0, 3}, {1, 1, 4}});
  const IrregularTensor t(2, std::move(slices));
  // R = 1 requires a 2x1 Q; take the first column of the identity and the matching row sum.
  const std::vector<Matrix> q{Matrix::Identity(2, 2).leftCols(1)};
  const auto ops = operands_of(t);
  const ImplicitY y(ops, q, 2);
  const Matrix f = slicewise_mttkrp(y, Mode::W, Matrix::Ones(1, 1), Matrix::Ones(1, 1), Matrix::Ones(2, 1));
  EXPECT_DOUBLE_EQ(f(0, 0), 3.0);

  // With a square Q = I the R = 2 mode-W output sums each Y row against H and V columns.
  const std::vector<Matrix> q2{Matrix::Identity(2, 2)};
  const ImplicitY y2(ops, q2, 2);
  const Matrix f2 = slicewise_mttkrp(y2, Mode::W, Matrix::Identity(2, 2), Matrix::Ones(1, 2), Matrix::Ones(2, 2));
  EXPECT_DOUBLE_EQ(f2(0, 0) + f2(0, 1), x.sum());
}

TEST(Mttkrp, MatchesMaterializedOracle) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto in = random_instance(rng, 5, 8, 12, 4);
    const auto ops = operands_of(in.tensor);
    const ImplicitY y(ops, in.q, 12);
    const auto dense = oracle::dense_slices(in.tensor);
    for (Mode m : kModes) {
      const Matrix f = slicewise_mttkrp(y, m, in.h, in.w, in.v);
      EXPECT_LE(rel(f, oracle::naive_mttkrp(dense, in.q, m, in.h, in.w, in.v)), 1e-10) << mode_name(m);
    }
  }
}

TEST(Mttkrp, DenseOperandsMatchSparse) {
  std::mt19937_64 rng(3);
  const auto in = random_instance(rng, 6, 9, 7, 3);
  const auto dense = oracle::dense_slices(in.tensor);
  std::vector<SliceOperand> dense_ops;
  for (const auto& d : dense) dense_ops.emplace_back(d);
  const auto sparse_ops = operands_of(in.tensor);
  const ImplicitY ys(sparse_ops, in.q, 7), yd(dense_ops, in.q, 7);
  for (Mode m : kModes) {
    EXPECT_LE(rel(slicewise_mttkrp(yd, m, in.h, in.w, in.v), slicewise_mttkrp(ys, m, in.h, in.w, in.v)), 1e-12);
  }
}

TEST(Mttkrp, AdditiveOverSlices) {
  std::mt19937_64 rng(4);
  const auto in = random_instance(rng, 4, 6, 5, 2);
  const auto ops = operands_of(in.tensor);
  const ImplicitY y(ops, in.q, 5);
  for (Mode m : {Mode::H, Mode::V}) {
    Matrix sum = Matrix::Zero(m == Mode::H ? 2 : 5, 2);
    for (Index k = 0; k < 4; ++k) {
      const std::vector<SliceOperand> one{ops[static_cast<std::size_t>(k)]};
      const std::vector<Matrix> qk{in.q[static_cast<std::size_t>(k)]};
      const ImplicitY yk(one, qk, 5);
      sum += slicewise_mttkrp(yk, m, in.h, in.w.row(k), in.v);
    }
    EXPECT_LE(rel(sum, slicewise_mttkrp(y, m, in.h, in.w, in.v)), 1e-12);
  }
}

TEST(Mttkrp, ModeWRowDependsOnlyOnItsSlice) {
  std::mt19937_64 rng(5);
  auto in = random_instance(rng, 5, 6, 6, 3);
  const auto ops = operands_of(in.tensor);
  const Matrix before = slicewise_mttkrp(ImplicitY(ops, in.q, 6), Mode::W, in.h, in.w, in.v);

  std::vector<SparseSlice> slices(in.tensor.slices().begin(), in.tensor.slices().end());
  slices[2] = oracle::random_slice(rng, slices[2].rows(), 6, 0.8);
  const IrregularTensor perturbed(6, std::move(slices));
  const auto ops2 = operands_of(perturbed);
  const Matrix after = slicewise_mttkrp(ImplicitY(ops2, in.q, 6), Mode::W, in.h, in.w, in.v);
  for (Index k = 0; k < 5; ++k) {
    if (k == 2) {
      EXPECT_NE(before.row(k), after.row(k));
    } else {
      EXPECT_EQ(before.row(k), after.row(k));
    }
  }
}

TEST(Mttkrp, ParallelReductionsAgree) {
  std::mt19937_64 rng(6);
  const auto in = random_instance(rng, 40, 10, 15, 4);
  const auto ops = operands_of(in.tensor);
  const ImplicitY y(ops, in.q, 15);
  for (Mode m : kModes) {
    const Matrix serial = slicewise_mttkrp(y, m, in.h, in.w, in.v);
    const Matrix det = slicewise_mttkrp(y, m, in.h, in.w, in.v, {4, true});
    const Matrix loose = slicewise_mttkrp(y, m, in.h, in.w, in.v, {4, false});
    EXPECT_EQ(serial, det) << mode_name(m);
    EXPECT_LE(rel(loose, serial), 1e-9) << mode_name(m);
  }
}

TEST(Mttkrp, ShapeErrors) {
  std::mt19937_64 rng(7);
  const auto in = random_instance(rng, 3, 5, 4, 2);
  const auto ops = operands_of(in.tensor);
  std::vector<Matrix> bad_q = in.q;
  bad_q[1] = Matrix::Ones(bad_q[1].rows() + 1, 2);
  EXPECT_THROW(ImplicitY(ops, bad_q, 4), ShapeError);
  std::vector<Matrix> short_q(in.q.begin(), in.q.end() - 1);
  EXPECT_THROW(ImplicitY(ops, short_q, 4), ShapeError);

  const ImplicitY y(ops, in.q, 4);
  EXPECT_THROW(slicewise_mttkrp(y, Mode::H, in.h, in.w, Matrix::Ones(5, 2)), ShapeError);
  EXPECT_THROW(slicewise_mttkrp(y, Mode::V, in.h, Matrix::Ones(2, 2), in.v), ShapeError);
  EXPECT_THROW(slicewise_mttkrp(y, Mode::W, Matrix::Ones(3, 3), in.w, in.v), ShapeError);
}

TEST(Mttkrp, NonFiniteAccumulationRejected) {
  std::mt19937_64 rng(8);
  const auto in = random_instance(rng, 3, 5, 4, 2);
  const auto ops = operands_of(in.tensor);
  const ImplicitY y(ops, in.q, 4);
  Matrix v = in.v;
  v.setConstant(std::numeric_limits<double>::infinity());
  EXPECT_THROW(slicewise_mttkrp(y, Mode::H, in.h, in.w, v), NumericalError);
}

}  // namespace
}  // namespace pf2
