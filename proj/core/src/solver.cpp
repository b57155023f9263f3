#include "pf2/solver.hpp"

#include "pf2/errors.hpp"
#include "pf2/linalg.hpp"
#include "pf2/parallel.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <string>

namespace pf2 {

namespace {

constexpr double kDivergenceGrowth = 1e6;
constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_ratio(double num, double den) {
  if (den > 0.0) return num / den;
  return num == 0.0 ? 0.0 : kInf;
}

Matrix draw_uniform(Index rows, Index cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) m(r, c) = unif(rng);
  return m;
}

struct ModeSystem {
  Matrix ft;  // Fᵀ
  double rho = 1.0;
  std::optional<CholeskyFactor> chol;
};

ModeSystem build_system(Mode mode, const ImplicitY& y, const std::array<Matrix, kNumModes>& factors,
                        const ReductionPolicy& reduction) {
  const auto idx = static_cast<std::size_t>(mode_index(mode));
  const Matrix g = gram_hadamard(factors, idx);
  const Index r = g.rows();
  ModeSystem sys;
  sys.rho = g.trace() / static_cast<double>(r);
  // All-zero neighbours leave G = 0 and F = 0; any positive step works then.
  if (!(sys.rho > 0.0)) sys.rho = 1.0;
  sys.ft = slicewise_mttkrp(y, mode, factors[0], factors[1], factors[2], reduction).transpose();
  sys.chol = CholeskyFactor::factor(g + sys.rho * Matrix::Identity(r, r));
  return sys;
}

}  // namespace

OrthogonalUpdate update_orthogonal_factors(std::span<const SliceOperand> slices, const Matrix& h, const Matrix& w,
                                           const Matrix& v, int threads) {
  const Index r = h.cols();
  if (w.rows() != static_cast<Index>(slices.size())) throw ShapeError("Q update: W row count != slice count");
  for (std::size_t k = 0; k < slices.size(); ++k) {
    if (slices[k].rows() < r) {
      throw ShapeError("Q update: slice " + std::to_string(k) + " has " + std::to_string(slices[k].rows()) +
                       " rows, fewer than rank " + std::to_string(r));
    }
  }
  OrthogonalUpdate out;
  out.q.resize(slices.size());
  std::vector<char> deficient(slices.size(), 0);
  const Matrix ht = h.transpose();
  parallel_for(slices.size(), threads, [&](std::size_t k) {
    // Sparse operand first, then the R-wide scalings.
    Matrix a = slices[k].times(v);
    a = a * w.row(static_cast<Index>(k)).asDiagonal();
    a = a * ht;
    PolarFactor polar = orthonormal_polar(a);
    out.q[k] = std::move(polar.q);
    deficient[k] = polar.rank_deficient ? 1 : 0;
  });
  for (char d : deficient) out.rank_deficient += d;
  return out;
}

ModeStats admm_update_mode(Mode mode, const ImplicitY& y, std::array<Matrix, kNumModes>& factors,
                           const ConstraintKind& constraint, AdmmState& state, const AdmmOptions& opts) {
  const auto idx = static_cast<std::size_t>(mode_index(mode));
  Matrix& factor = factors[idx];
  if (state.aux.rows() != factor.cols() || state.aux.cols() != factor.rows()) {
    state.aux = factor.transpose();
    state.dual = Matrix::Zero(factor.cols(), factor.rows());
  }

  ModeSystem sys = build_system(mode, y, factors, opts.reduction);
  state.rho = sys.rho;

  ModeStats stats;
  double first_primal = -1.0;
  const double scale = state.aux.norm() + state.dual.norm() + sys.ft.norm() / sys.rho;
  for (int it = 1; it <= opts.max_iters; ++it) {
    if (opts.recompute_each_inner && it > 1) sys = build_system(mode, y, factors, opts.reduction);
    const double rho = sys.rho;

    const Matrix zt = sys.chol->solve(sys.ft + rho * (state.aux + state.dual));
    Matrix aux_prev = std::move(state.aux);
    state.aux = prox_apply(constraint, zt - state.dual, rho);
    state.dual += state.aux - zt;

    const double primal_abs = (state.aux - zt).norm();
    stats.iterations = it;
    stats.primal_residual = safe_ratio(primal_abs, state.aux.norm());
    stats.dual_residual = safe_ratio((state.aux - aux_prev).norm(), state.dual.norm());

    if (!state.aux.allFinite() || !state.dual.allFinite()) {
      throw NumericalError("ADMM for " + std::string(mode_name(mode)) + ": non-finite iterate at inner iteration " +
                           std::to_string(it));
    }
    if (first_primal < 0.0) first_primal = primal_abs;
    if (primal_abs > kDivergenceGrowth * std::max(first_primal, scale)) {
      std::ostringstream msg;
      msg << "ADMM for " << mode_name(mode) << " diverged at inner iteration " << it << ": primal residual "
          << primal_abs << " vs. initial " << first_primal << ", rho " << rho;
      throw NumericalError(msg.str());
    }
    if (std::max(stats.primal_residual, stats.dual_residual) < opts.tol) break;
  }
  factor = state.aux.transpose();
  return stats;
}

double slice_residual_sq(const SliceOperand& x, const Matrix& u, const Eigen::RowVectorXd& s, const Matrix& v,
                         const Matrix& vtv) {
  const Matrix utxv = u.transpose() * x.times(v);  // R×R
  const Matrix utu = u.transpose() * u;
  const double cross = (utxv.diagonal().transpose().array() * s.array()).sum();
  const Matrix ss = s.transpose() * s;
  const double model_sq = (utu.array() * ss.array() * vtv.array()).sum();
  return x.frobenius_norm_sq() - 2.0 * cross + model_sq;
}

double compute_fit(const Parafac2Model& model, const IrregularTensor& tensor) {
  const Index K = tensor.n_slices();
  if (model.n_slices() != K || static_cast<Index>(model.q.size()) != K) {
    throw ShapeError("compute_fit: model has " + std::to_string(model.n_slices()) + " slices, tensor has " +
                     std::to_string(K));
  }
  if (model.v.rows() != tensor.n_cols()) throw ShapeError("compute_fit: V rows != tensor columns");
  const double total = frobenius_norm_sq(tensor);
  if (!(total > 0.0)) throw ValidationError("compute_fit: tensor has zero norm");
  const Matrix vtv = model.v.transpose() * model.v;
  double residual = 0.0;
  for (Index k = 0; k < K; ++k) {
    const Matrix u = model.u(k);
    if (u.rows() != tensor.slice(k).rows()) {
      throw ShapeError("compute_fit: U_" + std::to_string(k) + " rows != slice rows");
    }
    residual += slice_residual_sq(SliceOperand(tensor.slice(k)), u, model.w.row(k), model.v, vtv);
  }
  return 1.0 - residual / total;
}

double compute_sparsity(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return static_cast<double>((m.array() == 0.0).count()) / static_cast<double>(m.size());
}

Matrix reconstruct_slice(const Parafac2Model& model, Index k) {
  const Matrix u = model.u(k);
  return u * model.w.row(k).asDiagonal() * model.v.transpose();
}

namespace {

void validate_options(const FitOptions& opts) {
  if (opts.rank < 1) throw ValidationError("fit: rank must be at least 1");
  if (opts.max_outer_iters < 1 || opts.admm_max_iters < 1) throw ValidationError("fit: iteration caps must be >= 1");
  if (!(opts.outer_tol > 0.0) || !(opts.admm_tol > 0.0)) throw ValidationError("fit: tolerances must be positive");
  if (opts.thread_count < 1) throw ValidationError("fit: thread_count must be >= 1");
}

void check_slice_sizes(const std::vector<Index>& rows, Index rank, const char* what) {
  std::ostringstream bad;
  int count = 0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= rank) continue;
    if (count < 20) bad << (count ? ", " : "") << k << " (" << rows[k] << ")";
    ++count;
  }
  if (count > 0) {
    std::ostringstream msg;
    msg << "fit: " << count << " slice(s) have " << what << " below rank " << rank << ": " << bad.str();
    if (count > 20) msg << ", ...";
    throw ValidationError(msg.str());
  }
}

}  // namespace

FitResult fit(const IrregularTensor& tensor, const ConstraintSpec& spec, const FitOptions& opts) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  validate_options(opts);
  const Index K = tensor.n_slices();
  const Index J = tensor.n_cols();
  const Index R = opts.rank;
  if (K < 1 || J < 1) throw ValidationError("fit: tensor has no slices or no columns");
  const double total_norm = frobenius_norm_sq(tensor);
  if (!(total_norm > 0.0)) throw ValidationError("fit: tensor has zero norm");

  std::vector<Index> rows(static_cast<std::size_t>(K));
  for (Index k = 0; k < K; ++k) rows[static_cast<std::size_t>(k)] = tensor.slice(k).rows();
  check_slice_sizes(rows, R, "rows");

  Parafac2Model model;
  // Projected slices X′_k = C_kᵀX_k replace the data in smooth mode.
  std::vector<Matrix> projected;
  std::vector<SliceOperand> operands;
  double complement = 0.0;  // ‖X‖² − Σ‖C_kᵀX_k‖², fixed for the whole fit
  if (spec.smoothness) {
    const SmoothnessConfig& sc = *spec.smoothness;
    if (sc.gap_aware && !tensor.has_visit_days()) {
      throw ValidationError("fit: gap-aware smoothness needs visit days for every slice");
    }
    projected.resize(static_cast<std::size_t>(K));
    model.projectors.resize(static_cast<std::size_t>(K));
    std::vector<Index> ranks(static_cast<std::size_t>(K));
    for (Index k = 0; k < K; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      const auto& slice = tensor.slice(k);
      std::span<const std::int64_t> days;
      if (slice.has_visit_days()) days = *slice.visit_days();
      SliceBasis sb;
      try {
        sb = build_basis(slice.rows(), days, sc);
      } catch (const ValidationError& e) {
        throw ValidationError("fit: slice " + std::to_string(k) + ": " + e.what());
      }
      projected[ks] = project_slice(sb.matrix, slice, J);
      model.projectors[ks] = std::move(sb.matrix.left_orthonormal);
      ranks[ks] = sb.matrix.rank;
    }
    check_slice_sizes(ranks, R, "spline basis rank");
    double projected_norm = 0.0;
    for (const auto& p : projected) projected_norm += p.squaredNorm();
    complement = total_norm - projected_norm;
    for (const auto& p : projected) operands.emplace_back(p);
  } else {
    operands = operands_of(tensor);
  }

  std::mt19937_64 rng(opts.seed);
  std::array<Matrix, kNumModes> factors;
  factors[mode_index(Mode::H)] = draw_uniform(R, R, rng);
  factors[mode_index(Mode::V)] = draw_uniform(J, R, rng);
  factors[mode_index(Mode::W)] = draw_uniform(K, R, rng);
  std::array<AdmmState, kNumModes> states;

  AdmmOptions admm;
  admm.max_iters = opts.admm_max_iters;
  admm.tol = opts.admm_tol;
  admm.recompute_each_inner = opts.recompute_each_inner;
  admm.reduction = {opts.thread_count, opts.deterministic};

  FitResult result;
  std::vector<double> slice_residual(static_cast<std::size_t>(K));
  constexpr std::array<Mode, kNumModes> kSweep{Mode::H, Mode::W, Mode::V};

  for (int iter = 1; iter <= opts.max_outer_iters; ++iter) {
    const Matrix& h = factors[mode_index(Mode::H)];
    OrthogonalUpdate qs = update_orthogonal_factors(operands, h, factors[mode_index(Mode::W)],
                                                    factors[mode_index(Mode::V)], opts.thread_count);
    model.q = std::move(qs.q);
    const ImplicitY y(operands, model.q, J);

    IterationRecord rec;
    rec.iteration = iter;
    rec.rank_deficient = qs.rank_deficient;
    for (Mode mode : kSweep) {
      rec.modes[static_cast<std::size_t>(mode_index(mode))] =
          admm_update_mode(mode, y, factors, spec.on(mode), states[static_cast<std::size_t>(mode_index(mode))], admm);
    }

    const Matrix& hn = factors[mode_index(Mode::H)];
    const Matrix& wn = factors[mode_index(Mode::W)];
    const Matrix& vn = factors[mode_index(Mode::V)];
    const Matrix vtv = vn.transpose() * vn;
    parallel_for(static_cast<std::size_t>(K), opts.thread_count, [&](std::size_t k) {
      const auto ki = static_cast<Index>(k);
      slice_residual[k] = slice_residual_sq(operands[k], model.q[k] * hn, wn.row(ki), vn, vtv);
    });
    double residual = complement;
    for (double r : slice_residual) residual += r;
    rec.fit = 1.0 - residual / total_norm;
    rec.seconds = std::chrono::duration<double>(Clock::now() - start).count();

    if (!std::isfinite(rec.fit)) {
      std::ostringstream msg;
      msg << "fit diverged: non-finite FIT at outer iteration " << iter;
      if (!result.trace.iterations.empty()) msg << " (previous FIT " << result.trace.iterations.back().fit << ")";
      throw NumericalError(msg.str());
    }
    const bool have_prev = !result.trace.iterations.empty();
    const double prev = have_prev ? result.trace.iterations.back().fit : 0.0;
    result.trace.iterations.push_back(rec);

    if (opts.on_iteration) {
      Parafac2Model snapshot = model;
      snapshot.h = hn;
      snapshot.w = wn;
      snapshot.v = vn;
      opts.on_iteration(rec, snapshot);
    }
    if (have_prev && std::abs(rec.fit - prev) < opts.outer_tol * std::max(std::abs(prev), 1.0)) {
      result.trace.converged = true;
      break;
    }
  }

  model.h = std::move(factors[mode_index(Mode::H)]);
  model.w = std::move(factors[mode_index(Mode::W)]);
  model.v = std::move(factors[mode_index(Mode::V)]);
  result.model = std::move(model);
  return result;
}

}  // namespace pf2
