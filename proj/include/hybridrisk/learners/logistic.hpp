#pragma once

#include <span>
#include <vector>

#include "hybridrisk/model.hpp"

namespace hybridrisk::learners {

struct LogisticOptions {
  double l2 = 1e-4;
  double tol = 1e-8;
  int max_iter = 100;
};

/// P(y=1|x) = sigmoid(intercept + coefficients . x)
class LogisticModel final : public ProbabilisticModel {
 public:
  double intercept = 0.0;
  std::vector<double> coefficients;
  double l2 = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;

  std::vector<double> predict_proba(const Matrix& x) const override;
  std::size_t n_features() const override { return coefficients.size(); }
  std::string_view kind() const override { return "logistic"; }
  nlohmann::json to_json() const override;
  static LogisticModel from_json(const nlohmann::json& j);
};

/// Penalized maximum likelihood by damped Newton (IRLS). The objective is the
/// mean log-loss plus l2/2 * ||coefficients||^2; the intercept is unpenalized.
LogisticModel train_logistic(const Matrix& x, std::span<const int> y,
                             const LogisticOptions& options = {});

std::vector<double> predict_logistic(const LogisticModel& model, const Matrix& x);

/// params = [intercept, coefficients...]
double logistic_objective(std::span<const double> params, const Matrix& x, std::span<const int> y,
                          double l2);
std::vector<double> logistic_gradient(std::span<const double> params, const Matrix& x,
                                      std::span<const int> y, double l2);

}  // namespace hybridrisk::learners
