#pragma once

#include <cmath>
#include <vector>

#include "hybridrisk/common.hpp"

// Small deterministic dataset shared with the reference values frozen in the
// unit tests (computed once with scikit-learn / statsmodels / numpy).
namespace fixture {

inline constexpr std::size_t kRows = 40;

inline hybridrisk::Matrix features() {
  hybridrisk::Matrix x(kRows, 2);
  for (std::size_t i = 0; i < kRows; ++i) {
    const double d = static_cast<double>(i);
    x(i, 0) = std::sin(0.9 * d);
    x(i, 1) = std::cos(1.7 * d) + 0.1 * d / static_cast<double>(kRows);
  }
  return x;
}

inline std::vector<int> labels() {
  return {1, 1, 1, 1, 0, 0, 0, 1, 1, 1, 1, 1, 0, 0, 0, 1, 1, 1, 0, 0,
          0, 1, 1, 1, 0, 0, 0, 0, 0, 1, 1, 1, 0, 0, 0, 0, 1, 1, 0, 0};
}

// Tied scores for the paired AUROC comparison.
inline std::vector<double> scores_a() {
  return {0.0, 0.5,  0.7,  0.4,  -0.2, -0.7, -0.7, -0.2, 0.5, 0.8,  0.5,  -0.2, -0.8, -0.8,
          -0.2, 0.6, 1.0,  0.7,  -0.2, -0.9, -1.0, -0.2, 0.7, 1.1,  0.7,  -0.3, -1.1, -1.0,
          -0.1, 0.9, 1.2,  0.6,  -0.5, -1.2, -1.0, 0.0,  1.1, 1.2,  0.4,  -0.7};
}

inline std::vector<double> scores_b() {
  return {1.0,  -0.1, -1.0, 0.4, 0.9,  -0.6, -0.7, 0.8,  0.5,  -0.9, -0.3, 1.0, 0.1, -1.0,
          0.3,  1.0,  -0.4, -0.8, 0.7, 0.7,  -0.8, -0.4, 1.0,  0.2,  -0.9, 0.2, 1.0, -0.3,
          -0.8, 0.6,  0.8,  -0.7, -0.5, 1.0, 0.4,  -0.9, 0.0,  1.1,  -0.1, -0.8};
}

// Map arbitrary reals into (0, 1) without changing their order.
inline std::vector<double> to_unit(const std::vector<double>& v) {
  std::vector<double> out;
  for (double s : v) out.push_back(1.0 / (1.0 + std::exp(-s)));
  return out;
}

}  // namespace fixture
