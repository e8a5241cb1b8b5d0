#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hybridrisk/learners/platt.hpp"
#include "hybridrisk/model.hpp"

namespace hybridrisk::learners {

struct SvmOptions {
  double c = 1.0;
  /// RBF width; <= 0 selects default_gamma(x).
  double gamma = 0.0;
  /// Stopping tolerance on the maximal KKT violation.
  double tol = 1e-3;
  /// SMO iteration cap; 0 selects max(10^7, 100 n).
  std::size_t max_iterations = 0;
  std::size_t cache_megabytes = 256;
};

/// RBF-kernel SVM in dual form: f(x) = sum_i coef_i K(sv_i, x) + bias, where
/// coef_i = alpha_i * y_i for the support vectors.
struct SvmModel {
  Matrix support_vectors;
  std::vector<double> dual_coef;
  double bias = 0.0;
  double gamma = 1.0;
  double c = 1.0;
  std::size_t iterations = 0;
  bool converged = true;

  std::size_t n_features() const { return support_vectors.cols(); }

  nlohmann::json to_json() const;
  static SvmModel from_json(const nlohmann::json& j);
};

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);

/// 1 / (p * mean per-feature variance); 1 / p when every feature is constant.
double default_gamma(const Matrix& x);

/// Maps 0/1 labels to -1/+1.
std::vector<int> to_signed_labels(std::span<const int> labels01);

/// Sequential minimal optimization with second-order working-set selection.
/// Labels must be -1/+1. On hitting the iteration cap the last (feasible)
/// iterate is returned with converged = false and a warning.
SvmModel train_svm(const Matrix& x, std::span<const int> y_signed, const SvmOptions& options = {});

std::vector<double> svm_decision_value(const SvmModel& model, const Matrix& x);

/// SVM margins passed through a Platt calibrator; the SVM member of a hybrid.
class CalibratedSvm final : public ProbabilisticModel {
 public:
  CalibratedSvm(SvmModel svm, PlattCalibrator calibrator)
      : svm_(std::move(svm)), calibrator_(calibrator) {}

  const SvmModel& svm() const noexcept { return svm_; }
  const PlattCalibrator& calibrator() const noexcept { return calibrator_; }

  std::vector<double> predict_proba(const Matrix& x) const override;
  std::size_t n_features() const override { return svm_.n_features(); }
  std::string_view kind() const override { return "svm"; }
  /// Serializes the SVM only; the calibrator lives in the frozen pipeline.
  nlohmann::json to_json() const override { return svm_.to_json(); }

 private:
  SvmModel svm_;
  PlattCalibrator calibrator_;
};

}  // namespace hybridrisk::learners
