#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hybridrisk/metrics.hpp"

namespace hybridrisk::inference {

struct BootstrapResult {
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::size_t resamples = 0;
  std::uint64_t seed = 0;
  /// Resamples on which the statistic was undefined and had to be redrawn.
  std::size_t redraws = 0;
  /// One value per resample, in resample order.
  std::vector<double> replicates;
};

/// Row indices of resample `b`: positives and negatives are drawn with
/// replacement separately, so both classes keep their counts.
std::vector<std::size_t> stratified_resample(std::span<const int> labels, std::uint64_t seed,
                                             std::size_t b, std::size_t attempt = 0);

using IndexStatistic = std::function<double(std::span<const std::size_t>)>;

/// Percentile bootstrap of an arbitrary statistic over stratified resamples.
/// A resample on which `statistic` throws hybridrisk::Error is redrawn; more
/// than B/10 redraws raises MetricUndefined.
BootstrapResult bootstrap_statistic(std::span<const int> labels, const IndexStatistic& statistic,
                                    std::size_t resamples, std::uint64_t seed,
                                    double level = 0.95);

using Metric = std::function<double(const metrics::ScoredPredictions&)>;

BootstrapResult bootstrap_ci(const Metric& metric, const metrics::ScoredPredictions& sp,
                             std::size_t resamples, std::uint64_t seed, double level = 0.95);

/// Linear interpolation between order statistics (Hyndman-Fan type 7).
double percentile(std::vector<double> values, double q);

struct PairedTestResult {
  std::string method;
  double statistic = 0.0;
  double p_value = 1.0;
  /// DeLong only.
  double auc_a = 0.0;
  double auc_b = 0.0;
  double delta_auc = 0.0;
  double variance = 0.0;
  /// McNemar only: b = A right and B wrong, c = A wrong and B right.
  std::size_t b = 0;
  std::size_t c = 0;
};

/// Paired AUROC comparison with DeLong structural components. delta = A - B;
/// two-sided p from the standard normal.
PairedTestResult delong_test(std::span<const double> scores_a, std::span<const double> scores_b,
                             std::span<const int> labels);

/// Statistic (max(0, |b - c| - 1))^2 / (b + c). p from chi-square with one
/// degree of freedom when b + c >= 25, otherwise the exact two-sided binomial.
PairedTestResult mcnemar_from_counts(std::size_t b, std::size_t c);
PairedTestResult mcnemar_test(std::span<const int> pred_a, std::span<const int> pred_b,
                              std::span<const int> labels);

double standard_normal_cdf(double z);
/// Upper tail of chi-square with one degree of freedom.
double chi_square1_sf(double x);

}  // namespace hybridrisk::inference
