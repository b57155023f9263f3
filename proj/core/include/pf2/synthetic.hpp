#pragma once

#include "pf2/model.hpp"
#include "pf2/tensor.hpp"

#include <cstdint>

namespace pf2 {

struct SynthConfig {
  Index n_slices = 20;   // K
  Index n_cols = 30;     // J
  Index rank = 4;        // R
  Index rows_min = 10;
  Index rows_max = 20;
  double density = 1.0;  // fraction of nonzeros in V
  double noise_level = 0.0;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  IrregularTensor tensor;
  Parafac2Model truth;
};

/// Draws a ground-truth model and the tensor it generates.
///
/// H and W are uniform [0,1); V has exactly ⌈density·J·R⌉ nonzeros drawn
/// from (0,1], at least one per column when that count allows; Q_k is the
/// orthonormalised Q factor of a Gaussian I_k×R matrix. Noise is Gaussian
/// with standard deviation noise_level on the nonzero support of the clean
/// slice, and entries with |x| < 1e-12 are dropped. Visit days are the
/// cumulative sums of integer gaps uniform in [1, 30], starting at day 0.
/// Throws ValidationError when rows_min < rank or density ∉ (0, 1].
SyntheticData generate_synthetic(const SynthConfig& cfg);

}  // namespace pf2
