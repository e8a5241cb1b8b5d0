#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hybridrisk/common.hpp"
#include "hybridrisk/tabular.hpp"

namespace hybridrisk::smote {

struct SmoteConfig {
  std::size_t k_neighbors = 5;
  /// Desired minority / majority count ratio, in (0, 1].
  double target_ratio = 1.0;
  std::uint64_t seed = 0;
};

/// Feature rows with labels and the provenance of the rows they came from.
struct LabeledMatrix {
  Matrix x;
  std::vector<int> y;
  tabular::Provenance provenance;
};

struct SyntheticOrigin {
  std::size_t parent = 0;    // row index in the input
  std::size_t neighbor = 0;  // row index in the input
  double u = 0.0;
};

struct SmoteResult {
  /// Input rows verbatim, then the synthetic rows.
  LabeledMatrix data;
  /// One entry per synthetic row, in output order.
  std::vector<SyntheticOrigin> origins;
  int minority_label = 1;
  std::size_t k_used = 0;
};

/// Raises the minority count to ceil(target_ratio * majority) by interpolating
/// s = x + u (x_nn - x), u ~ U[0, 1), towards one of the k nearest minority
/// neighbours (Euclidean, ties by row index). Synthetic row j uses parent
/// j mod m and its own generator derived from (seed, j).
/// Throws LeakageGuard unless the input carries train provenance, and
/// MinorityTooSmall with fewer than two minority rows. k >= m is lowered to
/// m - 1 with a warning.
SmoteResult smote_oversample(const LabeledMatrix& train, const SmoteConfig& config = {});

}  // namespace hybridrisk::smote
