#include "pf2/model.hpp"

#include <stdexcept>
#include <string>

namespace pf2 {

Matrix Parafac2Model::u(Index k) const {
  if (k < 0 || k >= static_cast<Index>(q.size())) {
    throw std::out_of_range("model: slice index " + std::to_string(k) + " out of range");
  }
  const auto ks = static_cast<std::size_t>(k);
  if (projectors.empty()) return q[ks] * h;
  return projectors[ks] * (q[ks] * h);
}

}  // namespace pf2
