#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hybridrisk/common.hpp"

namespace hybridrisk::metrics {

/// Class-1 probabilities with their 0/1 outcomes.
class ScoredPredictions {
 public:
  ScoredPredictions(std::vector<double> scores, std::vector<int> labels, std::string cohort = {});

  std::span<const double> scores() const noexcept { return scores_; }
  std::span<const int> labels() const noexcept { return labels_; }
  const std::string& cohort() const noexcept { return cohort_; }
  std::size_t size() const noexcept { return scores_.size(); }
  std::size_t positives() const noexcept { return positives_; }
  std::size_t negatives() const noexcept { return scores_.size() - positives_; }
  double prevalence() const noexcept;

 private:
  std::vector<double> scores_;
  std::vector<int> labels_;
  std::string cohort_;
  std::size_t positives_ = 0;
};

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const noexcept { return tp + fp + fn + tn; }
  bool operator==(const ConfusionCounts&) const = default;
};

/// Predicted label is 1 iff score >= tau.
ConfusionCounts confusion_at_threshold(const ScoredPredictions& sp, double tau = 0.5);
ConfusionCounts confusion_from_labels(std::span<const int> predicted, std::span<const int> labels);

struct ThresholdedMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// precision = 0 when TP+FP = 0, recall = 0 when TP+FN = 0,
/// f1 = 0 when precision+recall = 0.
ThresholdedMetrics thresholded_metrics(const ConfusionCounts& c);

struct CurvePoint {
  double x = 0.0;  // FPR (ROC) or recall (PR)
  double y = 0.0;  // TPR (ROC) or precision (PR)
};

struct CurveSeries {
  std::vector<CurvePoint> points;
  double area = 0.0;
  /// PR curves: cohort prevalence. ROC curves: 0.5 (chance diagonal).
  double baseline = 0.0;
};

/// Staircase through distinct thresholds from (0,0) to (1,1); area by the
/// trapezoid rule, which counts tied positive/negative pairs as one half.
CurveSeries roc_curve(const ScoredPredictions& sp);

/// Tie-corrected Mann-Whitney statistic with midranks. This is the reported
/// AUROC; it equals roc_curve(sp).area to rounding.
double auroc(const ScoredPredictions& sp);
double auroc(std::span<const double> scores, std::span<const int> labels);

/// Midranks (1-based, ties averaged) of `values`.
std::vector<double> midranks(std::span<const double> values);

/// Step-wise precision-recall series over descending distinct thresholds,
/// starting at (recall 0, precision 1). area = average precision.
CurveSeries pr_curve(const ScoredPredictions& sp);

/// AP = sum_k (R_k - R_{k-1}) P_k over descending distinct thresholds.
double auprc(const ScoredPredictions& sp);
double auprc(std::span<const double> scores, std::span<const int> labels);

double brier(const ScoredPredictions& sp);

struct CalibrationFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Logistic recalibration y ~ sigmoid(intercept + slope * logit(score)),
/// scores clipped to [1e-6, 1 - 1e-6]. Throws DegenerateScores when all
/// clipped scores are equal.
CalibrationFit calibration_fit(const ScoredPredictions& sp);

struct ReliabilityBin {
  double lower = 0.0;
  double upper = 0.0;
  double mean_predicted = 0.0;
  double observed_frequency = 0.0;
  std::size_t count = 0;
};

/// Equal-width bins on [0, 1]; empty bins are kept with count 0. A score of
/// exactly 1 falls in the last bin.
std::vector<ReliabilityBin> reliability_bins(const ScoredPredictions& sp, std::size_t n_bins = 10);

struct CalibrationSummary {
  double brier = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<ReliabilityBin> bins;
};

}  // namespace hybridrisk::metrics
