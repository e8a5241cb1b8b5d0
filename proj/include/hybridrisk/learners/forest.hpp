#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hybridrisk/learners/tree.hpp"
#include "hybridrisk/model.hpp"

namespace hybridrisk::learners {

struct ForestOptions {
  std::size_t trees = 300;
  /// Features drawn per split; 0 = floor(sqrt(p)).
  std::size_t mtry = 0;
  /// 0 = unlimited.
  std::size_t max_depth = 0;
  double min_leaf = 2.0;
  bool bootstrap = true;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

/// Bagged Gini trees. The class-1 probability is the mean leaf class-1
/// frequency over trees; thresholding it at 0.5 gives the majority label.
class RandomForestModel final : public ProbabilisticModel {
 public:
  std::vector<Tree> trees;
  std::size_t features = 0;
  std::size_t mtry = 0;
  std::uint64_t seed = 0;

  std::vector<double> predict_proba(const Matrix& x) const override;
  std::size_t n_features() const override { return features; }
  std::string_view kind() const override { return "random_forest"; }
  nlohmann::json to_json() const override;
  static RandomForestModel from_json(const nlohmann::json& j);
};

RandomForestModel train_random_forest(const Matrix& x, std::span<const int> y,
                                      const ForestOptions& options = {});

std::vector<double> predict_rf_proba(const RandomForestModel& model, const Matrix& x);

/// Bootstrap multiplicities used for tree `t` (exposed for tests).
std::vector<double> bootstrap_weights(std::size_t rows, std::uint64_t forest_seed, std::size_t t);

}  // namespace hybridrisk::learners
