#pragma once

#include "pf2/types.hpp"

#include <string>

namespace pf2 {

/// Constraint attached to one factor. `param` is μ for l0 (used directly as
/// the squared-magnitude threshold) and λ for l1 (divided by ρ at call time).
class ConstraintKind {
 public:
  enum class Type { none, non_negative, l0, l1 };

  constexpr ConstraintKind() = default;

  static constexpr ConstraintKind none() { return {}; }
  static constexpr ConstraintKind non_negative() { return ConstraintKind(Type::non_negative, 0.0); }
  /// Throws ValidationError unless mu > 0.
  static ConstraintKind l0(double mu);
  /// Throws ValidationError unless lambda >= 0.
  static ConstraintKind l1(double lambda);

  constexpr Type type() const noexcept { return type_; }
  constexpr double param() const noexcept { return param_; }

  std::string to_string() const;

  friend constexpr bool operator==(const ConstraintKind&, const ConstraintKind&) = default;

 private:
  constexpr ConstraintKind(Type type, double param) : type_(type), param_(param) {}

  Type type_ = Type::none;
  double param_ = 0.0;
};

/// Proximal map of the constraint, element-wise:
///   none          x
///   non_negative  max(0, x)
///   l0(μ)         0 if x² < μ, else x
///   l1(λ)         sign(x)·max(0, |x| − λ/ρ)
/// Throws NumericalError on non-finite input, ValidationError if ρ ≤ 0.
Matrix prox_apply(const ConstraintKind& kind, const Matrix& m, double rho);

double prox_scalar(const ConstraintKind& kind, double x, double rho);

}  // namespace pf2
