#pragma once

#include "pf2/model.hpp"
#include "pf2/mttkrp.hpp"
#include "pf2/prox.hpp"
#include "pf2/spline.hpp"
#include "pf2/tensor.hpp"
#include "pf2/types.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace pf2 {

struct ConstraintSpec {
  ConstraintKind on_h;
  ConstraintKind on_w;
  ConstraintKind on_v;
  /// When set, U_k is restricted to the span of the slice's spline basis.
  std::optional<SmoothnessConfig> smoothness;

  const ConstraintKind& on(Mode mode) const noexcept {
    switch (mode) {
      case Mode::H: return on_h;
      case Mode::W: return on_w;
      case Mode::V: return on_v;
    }
    return on_h;
  }
};

/// Inner solve state for one factor, stored transposed (R×rows of factor).
/// Persists across outer iterations.
struct AdmmState {
  Matrix aux;   // Z̄, the constrained copy; factor of record
  Matrix dual;  // D, scaled dual variable
  double rho = 0.0;
};

struct ModeStats {
  int iterations = 0;
  double primal_residual = 0.0;  // ‖Z̄ − Zᵀ‖ / ‖Z̄‖
  double dual_residual = 0.0;    // ‖Z̄ − Z̄_prev‖ / ‖D‖
};

struct IterationRecord {
  int iteration = 0;
  double fit = 0.0;
  double seconds = 0.0;  // wall time since the fit started
  std::array<ModeStats, kNumModes> modes{};
  int rank_deficient = 0;  // Procrustes inputs completed this iteration
};

struct FitTrace {
  std::vector<IterationRecord> iterations;
  bool converged = false;
};

struct FitOptions {
  Index rank = 1;
  int max_outer_iters = 100;
  double outer_tol = 1e-4;  // on |ΔFIT| / max(|FIT_prev|, 1)
  int admm_max_iters = 10;
  double admm_tol = 1e-3;
  std::uint64_t seed = 0;
  int thread_count = 1;
  bool deterministic = true;
  /// Debug path: rebuild F, G, ρ and the Cholesky factor on every inner
  /// iteration instead of once per mode update.
  bool recompute_each_inner = false;
  /// Called after every outer iteration with the current model.
  std::function<void(const IterationRecord&, const Parafac2Model&)> on_iteration;
};

struct AdmmOptions {
  int max_iters = 10;
  double tol = 1e-3;
  bool recompute_each_inner = false;
  ReductionPolicy reduction;
};

struct FitResult {
  Parafac2Model model;
  FitTrace trace;
};

struct OrthogonalUpdate {
  std::vector<Matrix> q;
  int rank_deficient = 0;
};

/// Q_k = polar(X_k·V·diag(W(k,:))·Hᵀ) for every slice, the exact minimizer
/// of ‖X_k − Q_k·H·S_k·Vᵀ‖ over orthonormal Q_k. Throws ShapeError when a
/// slice has fewer rows than R.
OrthogonalUpdate update_orthogonal_factors(std::span<const SliceOperand> slices, const Matrix& h, const Matrix& w,
                                           const Matrix& v, int threads = 1);

/// AO-ADMM update of factors[mode] with the other two held fixed.
///
/// factors is {H, W, V}. G = Hadamard of the other Gram matrices,
/// ρ = trace(G)/R, F = slicewise MTTKRP; both are formed once and reused by
/// every inner iteration:
///   Zᵀ ← (G + ρI)⁻¹(Fᵀ + ρ(Z̄ + D))
///   Z̄  ← prox(Zᵀ − D)
///   D  ← D + Z̄ − Zᵀ
/// until max(primal, dual) residual < tol or max_iters. factors[mode] is set
/// to Z̄ᵀ. An empty or mis-shaped state is reset to aux = factorᵀ, D = 0.
/// Throws CholeskyError, or NumericalError when the residual grows by 1e6.
ModeStats admm_update_mode(Mode mode, const ImplicitY& y, std::array<Matrix, kNumModes>& factors,
                           const ConstraintKind& constraint, AdmmState& state, const AdmmOptions& opts);

/// Full constrained PARAFAC2 fit. Throws ValidationError for unusable input
/// (slices with I_k < R, missing visit days, bad options) and NumericalError
/// when the fit diverges.
FitResult fit(const IrregularTensor& tensor, const ConstraintSpec& spec, const FitOptions& opts);

/// 1 − Σ‖X_k − U_k·S_k·Vᵀ‖² / Σ‖X_k‖², without densifying X_k.
/// Throws ValidationError for a zero-norm tensor, ShapeError on mismatch.
double compute_fit(const Parafac2Model& model, const IrregularTensor& tensor);

/// ‖X − U·diag(s)·Vᵀ‖_F² via Gram algebra over the stored entries of X.
double slice_residual_sq(const SliceOperand& x, const Matrix& u, const Eigen::RowVectorXd& s, const Matrix& v,
                         const Matrix& vtv);

/// Fraction of entries exactly equal to zero.
double compute_sparsity(const Matrix& m);

/// Dense U_k·diag(W(k,:))·Vᵀ. Throws std::out_of_range for a bad k.
Matrix reconstruct_slice(const Parafac2Model& model, Index k);

}  // namespace pf2
