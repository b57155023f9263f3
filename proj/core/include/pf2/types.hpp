#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string_view>

namespace pf2 {

// All dense matrices are column-major (Eigen's default). Khatri-Rao and
// matricization index arithmetic in this library assume that layout.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Factor roles of the inner CP problem, in the order the ALS sweep visits them.
enum class Mode : int { H = 0, W = 1, V = 2 };

inline constexpr int kNumModes = 3;

constexpr std::string_view mode_name(Mode mode) {
  switch (mode) {
    case Mode::H: return "H";
    case Mode::W: return "W";
    case Mode::V: return "V";
  }
  return "?";
}

constexpr int mode_index(Mode mode) { return static_cast<int>(mode); }

}  // namespace pf2
