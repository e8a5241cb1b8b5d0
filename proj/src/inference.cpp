#include "hybridrisk/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hybridrisk::inference {

std::vector<std::size_t> stratified_resample(std::span<const int> labels, std::uint64_t seed,
                                             std::size_t b, std::size_t attempt) {
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] == 1 ? pos : neg).push_back(i);
  }
  Rng rng(derive_seed(derive_seed(seed, b), attempt));
  std::vector<std::size_t> out;
  out.reserve(labels.size());
  for (const auto* group : {&pos, &neg}) {
    for (std::size_t k = 0; k < group->size(); ++k) {
      out.push_back((*group)[rng.below(group->size())]);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) {
    throw Error(ErrorKind::metric_undefined, "percentile of an empty sample");
  }
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

BootstrapResult bootstrap_statistic(std::span<const int> labels, const IndexStatistic& statistic,
                                    std::size_t resamples, std::uint64_t seed, double level) {
  if (resamples < 1) {
    throw Error(ErrorKind::config, "bootstrap needs at least one resample");
  }
  if (!(level > 0.0 && level < 1.0)) {
    throw Error(ErrorKind::config, "confidence level must lie in (0, 1)");
  }
  if (labels.empty()) {
    throw Error(ErrorKind::metric_undefined, "bootstrap of an empty sample");
  }
  const std::size_t redraw_budget = resamples / 10;
  BootstrapResult result;
  result.resamples = resamples;
  result.seed = seed;
  result.replicates.assign(resamples, 0.0);
  std::vector<std::size_t> redraws(resamples, 0);

  std::vector<std::size_t> all(labels.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    all[i] = i;
  }
  result.point = statistic(all);

  parallel_for(resamples, [&](std::size_t b) {
    for (std::size_t attempt = 0;; ++attempt) {
      const auto rows = stratified_resample(labels, seed, b, attempt);
      try {
        result.replicates[b] = statistic(rows);
        return;
      } catch (const Error&) {
        redraws[b] += 1;
        if (redraws[b] > redraw_budget) {
          throw Error(ErrorKind::metric_undefined,
                      "metric undefined on more than 10% of bootstrap resamples");
        }
      }
    }
  });
  for (std::size_t r : redraws) {
    result.redraws += r;
  }
  if (result.redraws > redraw_budget) {
    throw Error(ErrorKind::metric_undefined,
                "metric undefined on more than 10% of bootstrap resamples");
  }
  const double alpha = (1.0 - level) / 2.0;
  result.lower = percentile(result.replicates, alpha);
  result.upper = percentile(result.replicates, 1.0 - alpha);
  return result;
}

BootstrapResult bootstrap_ci(const Metric& metric, const metrics::ScoredPredictions& sp,
                             std::size_t resamples, std::uint64_t seed, double level) {
  const auto scores = sp.scores();
  const auto labels = sp.labels();
  return bootstrap_statistic(
      labels,
      [&](std::span<const std::size_t> rows) {
        std::vector<double> s(rows.size());
        std::vector<int> y(rows.size());
        for (std::size_t k = 0; k < rows.size(); ++k) {
          s[k] = scores[rows[k]];
          y[k] = labels[rows[k]];
        }
        return metric(metrics::ScoredPredictions(std::move(s), std::move(y), sp.cohort()));
      },
      resamples, seed, level);
}

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double chi_square1_sf(double x) {
  if (x <= 0.0) {
    return 1.0;
  }
  return std::erfc(std::sqrt(x / 2.0));
}

namespace {

// Per-case structural components for one score vector.
struct Components {
  double auc = 0.0;
  std::vector<double> v10;  // one per positive
  std::vector<double> v01;  // one per negative
};

Components structural_components(std::span<const double> scores, std::span<const int> labels) {
  std::vector<double> pos_scores;
  std::vector<double> neg_scores;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    (labels[i] == 1 ? pos_scores : neg_scores).push_back(scores[i]);
  }
  const auto m = static_cast<double>(pos_scores.size());
  const auto n = static_cast<double>(neg_scores.size());
  const auto ranks_all = metrics::midranks(scores);
  const auto ranks_pos = metrics::midranks(pos_scores);
  const auto ranks_neg = metrics::midranks(neg_scores);

  Components c;
  c.auc = metrics::auroc(scores, labels);
  std::size_t ip = 0, in = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == 1) {
      c.v10.push_back((ranks_all[i] - ranks_pos[ip++]) / n);
    } else {
      c.v01.push_back(1.0 - (ranks_all[i] - ranks_neg[in++]) / m);
    }
  }
  return c;
}

double covariance(std::span<const double> a, std::span<const double> b) {
  const auto k = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= k;
  mb /= k;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += (a[i] - ma) * (b[i] - mb);
  }
  return s / (k - 1.0);
}

}  // namespace

PairedTestResult delong_test(std::span<const double> scores_a, std::span<const double> scores_b,
                             std::span<const int> labels) {
  if (scores_a.size() != labels.size() || scores_b.size() != labels.size()) {
    throw Error(ErrorKind::dimension_mismatch, "paired score vectors and labels differ in length");
  }
  std::size_t pos = 0;
  for (int y : labels) {
    pos += y == 1 ? 1 : 0;
  }
  if (pos == 0 || pos == labels.size()) {
    throw Error(ErrorKind::single_class, "DeLong test needs both classes");
  }
  const auto a = structural_components(scores_a, labels);
  const auto b = structural_components(scores_b, labels);

  PairedTestResult r;
  r.method = "delong";
  r.auc_a = a.auc;
  r.auc_b = b.auc;
  r.delta_auc = a.auc - b.auc;
  const auto m = static_cast<double>(a.v10.size());
  const auto n = static_cast<double>(a.v01.size());
  // Sample covariances need two cases per class; with one case the class
  // contributes no variance term.
  double var = 0.0;
  if (a.v10.size() > 1) {
    var += (covariance(a.v10, a.v10) + covariance(b.v10, b.v10) - 2.0 * covariance(a.v10, b.v10)) / m;
  }
  if (a.v01.size() > 1) {
    var += (covariance(a.v01, a.v01) + covariance(b.v01, b.v01) - 2.0 * covariance(a.v01, b.v01)) / n;
  }
  r.variance = std::max(0.0, var);
  if (r.variance <= 1e-300) {
    r.statistic = 0.0;
    r.p_value = r.delta_auc == 0.0 ? 1.0 : 0.0;
    return r;
  }
  r.statistic = r.delta_auc / std::sqrt(r.variance);
  r.p_value = std::clamp(std::erfc(std::abs(r.statistic) / std::numbers::sqrt2), 0.0, 1.0);
  return r;
}

PairedTestResult mcnemar_from_counts(std::size_t b, std::size_t c) {
  PairedTestResult r;
  r.method = "mcnemar";
  r.b = b;
  r.c = c;
  const std::size_t n = b + c;
  if (n == 0) {
    return r;
  }
  const double diff = std::max(0.0, std::abs(static_cast<double>(b) - static_cast<double>(c)) - 1.0);
  r.statistic = diff * diff / static_cast<double>(n);
  if (n >= 25) {
    r.p_value = chi_square1_sf(r.statistic);
    return r;
  }
  // Exact: 2 * P(X <= min(b, c)) with X ~ Binomial(n, 1/2).
  double term = std::ldexp(1.0, -static_cast<int>(n));  // C(n, 0) / 2^n
  double tail = 0.0;
  for (std::size_t k = 0; k <= std::min(b, c); ++k) {
    tail += term;
    term = term * static_cast<double>(n - k) / static_cast<double>(k + 1);
  }
  r.p_value = std::min(1.0, 2.0 * tail);
  return r;
}

PairedTestResult mcnemar_test(std::span<const int> pred_a, std::span<const int> pred_b,
                              std::span<const int> labels) {
  if (pred_a.size() != labels.size() || pred_b.size() != labels.size()) {
    throw Error(ErrorKind::dimension_mismatch, "paired predictions and labels differ in length");
  }
  std::size_t b = 0, c = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool a_right = pred_a[i] == labels[i];
    const bool b_right = pred_b[i] == labels[i];
    if (a_right && !b_right) ++b;
    if (!a_right && b_right) ++c;
  }
  return mcnemar_from_counts(b, c);
}

}  // namespace hybridrisk::inference
