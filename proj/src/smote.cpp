#include "hybridrisk/smote.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace hybridrisk::smote {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

SmoteResult smote_oversample(const LabeledMatrix& train, const SmoteConfig& config) {
  if (train.provenance.partition != tabular::Partition::train) {
    throw Error(ErrorKind::leakage_guard,
                "SMOTE refused " + tabular::to_string(train.provenance) + " rows");
  }
  if (config.k_neighbors < 1) {
    throw Error(ErrorKind::config, "SMOTE needs k_neighbors >= 1");
  }
  if (!(config.target_ratio > 0.0 && config.target_ratio <= 1.0)) {
    throw Error(ErrorKind::config, "SMOTE target_ratio must lie in (0, 1]");
  }
  const Matrix& x = train.x;
  if (x.rows() != train.y.size()) {
    throw Error(ErrorKind::dimension_mismatch, "feature rows and labels differ in length");
  }

  std::size_t positives = 0;
  for (int label : train.y) {
    positives += label == 1 ? 1 : 0;
  }
  const std::size_t negatives = train.y.size() - positives;
  SmoteResult result;
  result.minority_label = positives <= negatives ? 1 : 0;
  const std::size_t majority = std::max(positives, negatives);

  std::vector<std::size_t> minority;
  for (std::size_t i = 0; i < train.y.size(); ++i) {
    if (train.y[i] == result.minority_label) {
      minority.push_back(i);
    }
  }
  const std::size_t m = minority.size();
  if (m < 2) {
    throw Error(ErrorKind::minority_too_small,
                "SMOTE needs at least two minority rows, found " + std::to_string(m));
  }
  std::size_t k = config.k_neighbors;
  if (k >= m) {
    k = m - 1;
    warn("SMOTE k_neighbors " + std::to_string(config.k_neighbors) + " >= minority count " +
         std::to_string(m) + "; using k = " + std::to_string(k));
  }
  result.k_used = k;

  const auto target = static_cast<std::size_t>(
      std::ceil(config.target_ratio * static_cast<double>(majority) - 1e-9));
  const std::size_t synthetic = target > m ? target - m : 0;

  result.data.x = x;
  result.data.y = train.y;
  result.data.provenance = train.provenance;
  if (synthetic == 0) {
    return result;
  }

  // k nearest minority neighbours of each minority row, as minority positions.
  std::vector<std::size_t> neighbours(m * k);
  parallel_for(m, [&](std::size_t i) {
    std::vector<std::pair<double, std::size_t>> d;
    d.reserve(m - 1);
    const auto xi = x.row(minority[i]);
    for (std::size_t j = 0; j < m; ++j) {
      if (j != i) {
        d.emplace_back(squared_distance(xi, x.row(minority[j])), j);
      }
    }
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    for (std::size_t t = 0; t < k; ++t) {
      neighbours[i * k + t] = d[t].second;
    }
  });

  const std::size_t p = x.cols();
  Matrix extra(synthetic, p);
  result.origins.resize(synthetic);
  parallel_for(synthetic, [&](std::size_t j) {
    Rng rng(derive_seed(config.seed, j));
    const std::size_t parent = j % m;
    const std::size_t nn = neighbours[parent * k + rng.below(k)];
    const double u = rng.uniform();
    const auto a = x.row(minority[parent]);
    const auto b = x.row(minority[nn]);
    auto out = extra.row(j);
    for (std::size_t c = 0; c < p; ++c) {
      // Clamp guards against the last-bit rounding of a + u (b - a).
      out[c] = std::clamp(a[c] + u * (b[c] - a[c]), std::min(a[c], b[c]), std::max(a[c], b[c]));
    }
    result.origins[j] = {minority[parent], minority[nn], u};
  });

  for (std::size_t j = 0; j < synthetic; ++j) {
    result.data.x.append_row(extra.row(j));
    result.data.y.push_back(result.minority_label);
  }
  return result;
}

}  // namespace hybridrisk::smote
