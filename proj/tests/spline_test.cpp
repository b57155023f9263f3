#include "oracles.hpp"

#include "pf2/errors.hpp"
#include "pf2/spline.hpp"

#include <gtest/gtest.h>

#include <algorithm>

namespace pf2 {
namespace {

SplineBasis make_basis(std::vector<double> knots, int degree) {
  const auto n = static_cast<Index>(knots.size()) - degree - 1;
  return {std::move(knots), degree, n};
}

SmoothnessConfig config(Index l, int d, bool gap_aware) {
  SmoothnessConfig cfg;
  cfg.n_basis = l;
  cfg.degree = d;
  cfg.gap_aware = gap_aware;
  return cfg;
}

TEST(EvalBasis, DegreeZeroIndicator) {
  const auto b = make_basis({0, 1, 2, 3}, 0);
  EXPECT_EQ(eval_basis(b, 1, 0, 1.0), 1.0);
  EXPECT_EQ(eval_basis(b, 1, 0, 1.5), 1.0);
  EXPECT_EQ(eval_basis(b, 1, 0, 2.0), 0.0);
  EXPECT_EQ(eval_basis(b, 1, 0, 0.5), 0.0);
  EXPECT_EQ(eval_basis(b, 2, 0, 3.0), 1.0);  // closed at the final knot
}

TEST(EvalBasis, LinearHat) {
  const auto b = make_basis({0, 1, 2}, 1);
  EXPECT_DOUBLE_EQ(eval_basis(b, 0, 1, 0.5), 0.5);
  EXPECT_DOUBLE_EQ(eval_basis(b, 0, 1, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(eval_basis(b, 0, 1, 1.5), 0.5);
  EXPECT_DOUBLE_EQ(eval_basis(b, 0, 1, 2.5), 0.0);
}

TEST(EvalBasis, CubicMatchesTruncatedPowerForm) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unif(0.0, 10.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> knots(9);
    for (auto& k : knots) k = unif(rng);
    std::sort(knots.begin(), knots.end());
    const auto b = make_basis(knots, 3);
    std::uniform_real_distribution<double> span(knots.front(), knots.back());
    for (int n = 0; n < 100; ++n) {
      const double t = span(rng);
      for (Index i = 0; i < b.n_basis; ++i) {
        const double expected = oracle::truncated_power_bspline(knots, static_cast<int>(i), 3, t);
        EXPECT_NEAR(eval_basis(b, i, 3, t), expected, 1e-9 * std::max(1.0, std::abs(expected)))
            << "i=" << i << " t=" << t;
      }
    }
  }
}

TEST(EvalBasis, NonNegativeAndLocallySupported) {
  const auto b = build_basis(20, {}, config(8, 3, false)).basis;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unif(-2.0, 21.0);
  for (int n = 0; n < 1000; ++n) {
    const double t = unif(rng);
    for (Index i = 0; i < b.n_basis; ++i) {
      const double value = eval_basis(b, i, 3, t);
      EXPECT_GE(value, 0.0);
      const auto lo = b.knots[static_cast<std::size_t>(i)];
      const auto hi = b.knots[static_cast<std::size_t>(i) + 4];
      if (t < lo || t > hi) EXPECT_EQ(value, 0.0);
    }
  }
}

TEST(EvalBasis, Continuous) {
  const auto b = build_basis(30, {}, config(7, 3, false)).basis;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.0, 29.0 - 1e-6);
  constexpr double eps = 1e-7;
  // Cubic B-splines on this knot vector have slope well under 1 per unit; 10x margin on eps.
  constexpr double lipschitz = 1.0;
  for (int n = 0; n < 1000; ++n) {
    const double t = unif(rng);
    for (Index i = 0; i < b.n_basis; ++i) {
      EXPECT_LE(std::abs(eval_basis(b, i, 3, t + eps) - eval_basis(b, i, 3, t)), 10 * eps * lipschitz);
    }
  }
}

TEST(EvalBasis, BadIndex) {
  const auto b = make_basis({0, 1, 2}, 1);
  EXPECT_THROW(eval_basis(b, 1, 1, 0.5), ShapeError);
  EXPECT_THROW(eval_basis(b, -1, 1, 0.5), ShapeError);
}

TEST(BuildBasis, UniformDaysMatchIndexMode) {
  const std::vector<std::int64_t> days{0, 1, 2, 3, 4};
  const auto gap = build_basis(5, days, config(4, 2, true));
  const auto idx = build_basis(5, {}, config(4, 2, false));
  EXPECT_EQ(gap.matrix.matrix, idx.matrix.matrix);
}

TEST(BuildBasis, SupportPlacementFollowsGaps) {
  const std::vector<std::int64_t> days{0, 1, 2, 10};
  const auto gap = build_basis(4, days, config(2, 0, true)).matrix.matrix;
  const auto idx = build_basis(4, {}, config(2, 0, false)).matrix.matrix;
  for (Index i = 0; i < 3; ++i) {
    EXPECT_EQ(gap(i, 0), 1.0);
    EXPECT_EQ(gap(i, 1), 0.0);
  }
  EXPECT_EQ(gap(3, 0), 0.0);
  EXPECT_EQ(gap(3, 1), 1.0);
  EXPECT_EQ(idx(1, 1), 0.0);
  EXPECT_EQ(idx(2, 0), 0.0);
  EXPECT_EQ(idx(2, 1), 1.0);
}

TEST(BuildBasis, RowsSumToOne) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::int64_t> gap(1, 30);
  for (int d = 1; d <= 4; ++d) {
    std::vector<std::int64_t> days{0};
    for (int i = 1; i < 25; ++i) days.push_back(days.back() + gap(rng));
    for (bool aware : {true, false}) {
      const auto m = build_basis(25, days, config(9, d, aware)).matrix.matrix;
      for (Index i = 0; i < 25; ++i) EXPECT_NEAR(m.row(i).sum(), 1.0, 1e-12) << "d=" << d << " row " << i;
    }
  }
}

TEST(BuildBasis, KnotVectorShape) {
  const auto b = build_basis(30, {}, config(7, 3, false)).basis;
  ASSERT_EQ(b.knots.size(), 11u);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(b.knots[static_cast<std::size_t>(i)], 0.0);
    EXPECT_EQ(b.knots[static_cast<std::size_t>(10 - i)], 29.0);
  }
  EXPECT_TRUE(std::is_sorted(b.knots.begin(), b.knots.end()));
  EXPECT_DOUBLE_EQ(b.knots[5] - b.knots[4], b.knots[6] - b.knots[5]);
}

TEST(BuildBasis, LeftFactorOrthonormalAndSpansBasis) {
  std::vector<std::int64_t> days;
  for (int i = 0; i < 15; ++i) days.push_back(i * i);
  const auto sb = build_basis(15, days, config(6, 3, true));
  const Matrix& c = sb.matrix.left_orthonormal;
  EXPECT_EQ(sb.matrix.rank, 6);
  EXPECT_LE((c.transpose() * c - Matrix::Identity(6, 6)).norm(), 1e-10);
  const Matrix& m = sb.matrix.matrix;
  EXPECT_LE((c * (c.transpose() * m) - m).norm(), 1e-10);
}

TEST(BuildBasis, RankTruncatesEmptyBasisFunctions) {
  // All visits before day 1 leave the basis functions supported near day 100 with zero columns.
  const std::vector<std::int64_t> days{0, 1, 2, 3, 4, 5, 100};
  const auto sb = build_basis(7, days, config(6, 1, true));
  EXPECT_LT(sb.matrix.rank, 6);
  EXPECT_EQ(sb.matrix.left_orthonormal.cols(), sb.matrix.rank);
}

TEST(BuildBasis, Errors) {
  EXPECT_THROW(build_basis(5, {}, config(6, 3, false)), ValidationError);
  EXPECT_THROW(build_basis(10, {}, config(3, 3, false)), ValidationError);
  const std::vector<std::int64_t> same{4, 4, 4, 4, 4};
  EXPECT_THROW(build_basis(5, same, config(4, 2, true)), ValidationError);
  EXPECT_THROW(build_basis(5, {}, config(4, 2, true)), ValidationError);
  EXPECT_THROW(build_basis(1, {}, config(1, 0, false)), ValidationError);
}

TEST(ProjectSlice, IdentityProjection) {
  std::mt19937_64 rng(5);
  const auto s = oracle::random_slice(rng, 4, 6, 0.5);
  SliceBasisMatrix sbm;
  sbm.left_orthonormal = Matrix::Identity(4, 4);
  sbm.rank = 4;
  EXPECT_EQ(project_slice(sbm, s, 6), s.to_dense(6));
}

TEST(ProjectSlice, ZeroSlice) {
  const auto sb = build_basis(8, {}, config(4, 2, false));
  EXPECT_EQ(project_slice(sb.matrix, SparseSlice(8, {}), 5), Matrix::Zero(4, 5));
}

TEST(ProjectSlice, MatchesDenseProduct) {
  std::mt19937_64 rng(6);
  const auto sb = build_basis(12, {}, config(5, 3, false));
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = oracle::random_slice(rng, 12, 7, 0.3);
    const Matrix expected = sb.matrix.left_orthonormal.transpose() * s.to_dense(7);
    EXPECT_LE((project_slice(sb.matrix, s, 7) - expected).norm(), 1e-12);
  }
  EXPECT_THROW(project_slice(sb.matrix, SparseSlice(11, {}), 7), ShapeError);
}

}  // namespace
}  // namespace pf2
