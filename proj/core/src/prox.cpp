#include "pf2/prox.hpp"

#include "pf2/errors.hpp"

#include <cmath>
#include <sstream>

namespace pf2 {

ConstraintKind ConstraintKind::l0(double mu) {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw ValidationError("l0 threshold mu must be positive and finite");
  return ConstraintKind(Type::l0, mu);
}

ConstraintKind ConstraintKind::l1(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ValidationError("l1 weight lambda must be non-negative and finite");
  }
  return ConstraintKind(Type::l1, lambda);
}

std::string ConstraintKind::to_string() const {
  std::ostringstream out;
  out.precision(17);
  switch (type_) {
    case Type::none: return "none";
    case Type::non_negative: return "nonneg";
    case Type::l0: out << "l0(" << param_ << ")"; break;
    case Type::l1: out << "l1(" << param_ << ")"; break;
  }
  return out.str();
}

double prox_scalar(const ConstraintKind& kind, double x, double rho) {
  switch (kind.type()) {
    case ConstraintKind::Type::none:
      return x;
    case ConstraintKind::Type::non_negative:
      return x > 0.0 ? x : 0.0;
    case ConstraintKind::Type::l0:
      // Equality keeps the value.
      return x * x < kind.param() ? 0.0 : x;
    case ConstraintKind::Type::l1: {
      const double shrunk = std::abs(x) - kind.param() / rho;
      return shrunk > 0.0 ? std::copysign(shrunk, x) : 0.0;
    }
  }
  return x;
}

Matrix prox_apply(const ConstraintKind& kind, const Matrix& m, double rho) {
  if (!(rho > 0.0)) throw ValidationError("prox: rho must be positive");
  if (!m.allFinite()) throw NumericalError("prox: non-finite input");
  if (kind.type() == ConstraintKind::Type::none) return m;
  return m.unaryExpr([&](double x) { return prox_scalar(kind, x, rho); });
}

}  // namespace pf2
