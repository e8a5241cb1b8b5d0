#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hybridrisk/learners/tree.hpp"
#include "hybridrisk/model.hpp"

namespace hybridrisk::learners {

struct BoostingOptions {
  std::size_t rounds = 300;
  double learning_rate = 0.1;
  std::size_t max_depth = 6;
  double lambda = 1.0;
  double gamma = 0.0;
  double min_child_weight = 1.0;
  /// Recorded for the manifest; the exact greedy learner draws no randomness.
  std::uint64_t seed = 0;
};

/// Logistic-loss gradient boosting with second-order (Newton) leaves:
/// margin(x) = base_score + learning_rate * sum_t f_t(x).
class GradientBoostingModel final : public ProbabilisticModel {
 public:
  double base_score = 0.0;
  double learning_rate = 0.1;
  double lambda = 1.0;
  double gamma = 0.0;
  std::size_t features = 0;
  std::uint64_t seed = 0;
  std::vector<Tree> trees;
  /// Mean training log-loss after each round (index 0 = base score only).
  std::vector<double> training_loss;

  std::vector<double> margin(const Matrix& x) const;
  std::vector<double> predict_proba(const Matrix& x) const override;
  std::size_t n_features() const override { return features; }
  std::string_view kind() const override { return "gradient_boosting"; }
  nlohmann::json to_json() const override;
  static GradientBoostingModel from_json(const nlohmann::json& j);
};

GradientBoostingModel train_gbt(const Matrix& x, std::span<const int> y,
                                const BoostingOptions& options = {});

std::vector<double> predict_gbt_proba(const GradientBoostingModel& model, const Matrix& x);

double mean_log_loss(std::span<const double> margins, std::span<const int> y);

}  // namespace hybridrisk::learners
