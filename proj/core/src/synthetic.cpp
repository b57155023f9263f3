#include "pf2/synthetic.hpp"

#include "pf2/errors.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace pf2 {

namespace {

constexpr double kDropBelow = 1e-12;

void validate(const SynthConfig& cfg) {
  if (cfg.n_slices < 1 || cfg.n_cols < 1 || cfg.rank < 1) {
    throw ValidationError("synth: K, J and rank must be at least 1");
  }
  if (cfg.rows_min < cfg.rank) {
    throw ValidationError("synth: rows_min " + std::to_string(cfg.rows_min) + " is below rank " +
                          std::to_string(cfg.rank) + "; Q_k cannot have orthonormal columns");
  }
  if (cfg.rows_max < cfg.rows_min) throw ValidationError("synth: rows_max < rows_min");
  if (!(cfg.density > 0.0 && cfg.density <= 1.0)) throw ValidationError("synth: density must lie in (0, 1]");
  if (!(cfg.noise_level >= 0.0) || !std::isfinite(cfg.noise_level)) {
    throw ValidationError("synth: noise_level must be finite and non-negative");
  }
}

Matrix draw_uniform(Index rows, Index cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) m(r, c) = unif(rng);
  return m;
}

Matrix draw_sparse_v(Index j, Index r, double density, std::mt19937_64& rng) {
  const Index total = j * r;
  const auto target = std::clamp<Index>(static_cast<Index>(std::ceil(density * static_cast<double>(total) - 1e-9)), 1, total);
  std::vector<char> chosen(static_cast<std::size_t>(total), 0);
  Index placed = 0;
  // One entry per column first so no component is identically zero.
  if (target >= r) {
    std::uniform_int_distribution<Index> pick_row(0, j - 1);
    for (Index c = 0; c < r; ++c) {
      chosen[static_cast<std::size_t>(c * j + pick_row(rng))] = 1;
      ++placed;
    }
  }
  std::vector<Index> rest;
  for (Index n = 0; n < total; ++n)
    if (!chosen[static_cast<std::size_t>(n)]) rest.push_back(n);
  std::shuffle(rest.begin(), rest.end(), rng);
  for (Index n = 0; placed < target; ++n, ++placed) chosen[static_cast<std::size_t>(rest[static_cast<std::size_t>(n)])] = 1;

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix v = Matrix::Zero(j, r);
  for (Index n = 0; n < total; ++n) {
    if (chosen[static_cast<std::size_t>(n)]) v(n % j, n / j) = 1.0 - unif(rng);  // (0, 1]
  }
  return v;
}

Matrix draw_orthonormal(Index rows, Index r, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix g(rows, r);
  for (Index c = 0; c < r; ++c)
    for (Index i = 0; i < rows; ++i) g(i, c) = gauss(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  return qr.householderQ() * Matrix::Identity(rows, r);
}

}  // namespace

SyntheticData generate_synthetic(const SynthConfig& cfg) {
  validate(cfg);
  std::mt19937_64 rng(cfg.seed);
  const Index r = cfg.rank;

  Parafac2Model truth;
  truth.h = draw_uniform(r, r, rng);
  truth.v = draw_sparse_v(cfg.n_cols, r, cfg.density, rng);
  truth.w = draw_uniform(cfg.n_slices, r, rng);

  std::uniform_int_distribution<Index> pick_rows(cfg.rows_min, cfg.rows_max);
  std::uniform_int_distribution<std::int64_t> pick_gap(1, 30);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<SparseSlice> slices;
  slices.reserve(static_cast<std::size_t>(cfg.n_slices));
  for (Index k = 0; k < cfg.n_slices; ++k) {
    const Index rows = pick_rows(rng);
    truth.q.push_back(draw_orthonormal(rows, r, rng));
    const Matrix clean = truth.q.back() * truth.h * truth.w.row(k).asDiagonal() * truth.v.transpose();

    std::vector<Entry> entries;
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cfg.n_cols; ++j) {
        double x = clean(i, j);
        if (x == 0.0) continue;
        if (cfg.noise_level > 0.0) x += cfg.noise_level * gauss(rng);
        if (std::abs(x) >= kDropBelow) entries.push_back({i, j, x});
      }
    }
    VisitDays days(static_cast<std::size_t>(rows));
    std::int64_t day = 0;
    for (auto& d : days) {
      d = day;
      day += pick_gap(rng);
    }
    slices.emplace_back(rows, std::move(entries), std::move(days));
  }
  return {IrregularTensor(cfg.n_cols, std::move(slices)), std::move(truth)};
}

}  // namespace pf2
