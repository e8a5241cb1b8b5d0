#include "hybridrisk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hybridrisk/logistic1d.hpp"

namespace hybridrisk::metrics {

namespace {

void check_pair(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorKind::dimension_mismatch, "scores and labels differ in length");
  }
}

// Row order by descending score; ties keep input order.
std::vector<std::size_t> descending_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

struct ThresholdGroup {
  std::size_t pos = 0;
  std::size_t neg = 0;
};

// Positive/negative counts per distinct score, highest score first.
std::vector<ThresholdGroup> threshold_groups(std::span<const double> scores,
                                             std::span<const int> labels) {
  const auto order = descending_order(scores);
  std::vector<ThresholdGroup> groups;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k == 0 || scores[order[k]] != scores[order[k - 1]]) {
      groups.push_back({});
    }
    (labels[order[k]] == 1 ? groups.back().pos : groups.back().neg) += 1;
  }
  return groups;
}

}  // namespace

ScoredPredictions::ScoredPredictions(std::vector<double> scores, std::vector<int> labels,
                                     std::string cohort)
    : scores_(std::move(scores)), labels_(std::move(labels)), cohort_(std::move(cohort)) {
  check_pair(scores_, labels_);
  if (scores_.empty()) {
    throw Error(ErrorKind::empty_file, "no scored predictions");
  }
  for (double s : scores_) {
    if (!(s >= 0.0 && s <= 1.0)) {
      throw Error(ErrorKind::config, "scores must be probabilities in [0, 1]");
    }
  }
  for (int y : labels_) {
    if (y != 0 && y != 1) {
      throw Error(ErrorKind::outcome_not_binary, "labels must be 0/1");
    }
    positives_ += y == 1 ? 1 : 0;
  }
}

double ScoredPredictions::prevalence() const noexcept {
  return static_cast<double>(positives_) / static_cast<double>(scores_.size());
}

ConfusionCounts confusion_at_threshold(const ScoredPredictions& sp, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw Error(ErrorKind::config, "decision threshold must lie in (0, 1)");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < sp.size(); ++i) {
    const bool predicted = sp.scores()[i] >= tau;
    const bool actual = sp.labels()[i] == 1;
    if (predicted && actual) ++c.tp;
    else if (predicted) ++c.fp;
    else if (actual) ++c.fn;
    else ++c.tn;
  }
  return c;
}

ConfusionCounts confusion_from_labels(std::span<const int> predicted, std::span<const int> labels) {
  if (predicted.size() != labels.size()) {
    throw Error(ErrorKind::dimension_mismatch, "predictions and labels differ in length");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool p = predicted[i] == 1;
    const bool a = labels[i] == 1;
    if (p && a) ++c.tp;
    else if (p) ++c.fp;
    else if (a) ++c.fn;
    else ++c.tn;
  }
  return c;
}

ThresholdedMetrics thresholded_metrics(const ConfusionCounts& c) {
  ThresholdedMetrics m;
  const auto n = static_cast<double>(c.total());
  m.accuracy = n > 0 ? static_cast<double>(c.tp + c.tn) / n : 0.0;
  m.precision = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  m.recall = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  m.f1 = m.precision + m.recall > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t k = 0;
  while (k < order.size()) {
    std::size_t end = k + 1;
    while (end < order.size() && values[order[end]] == values[order[k]]) {
      ++end;
    }
    // positions k..end-1 hold ranks k+1..end
    const double rank = 0.5 * static_cast<double>(k + 1 + end);
    for (std::size_t t = k; t < end; ++t) {
      ranks[order[t]] = rank;
    }
    k = end;
  }
  return ranks;
}

double auroc(std::span<const double> scores, std::span<const int> labels) {
  check_pair(scores, labels);
  double pos = 0.0;
  double rank_sum = 0.0;
  const auto ranks = midranks(scores);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == 1) {
      pos += 1.0;
      rank_sum += ranks[i];
    }
  }
  const double neg = static_cast<double>(scores.size()) - pos;
  if (pos == 0.0 || neg == 0.0) {
    throw Error(ErrorKind::single_class, "AUROC needs both classes");
  }
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

double auroc(const ScoredPredictions& sp) { return auroc(sp.scores(), sp.labels()); }

CurveSeries roc_curve(const ScoredPredictions& sp) {
  const double pos = static_cast<double>(sp.positives());
  const double neg = static_cast<double>(sp.negatives());
  if (pos == 0.0 || neg == 0.0) {
    throw Error(ErrorKind::single_class, "ROC curve needs both classes");
  }
  CurveSeries curve;
  curve.baseline = 0.5;
  curve.points.push_back({0.0, 0.0});
  double tp = 0.0;
  double fp = 0.0;
  double twice_area = 0.0;  // in units of pos * neg
  for (const auto& g : threshold_groups(sp.scores(), sp.labels())) {
    const double tp_next = tp + static_cast<double>(g.pos);
    twice_area += static_cast<double>(g.neg) * (tp + tp_next);
    tp = tp_next;
    fp += static_cast<double>(g.neg);
    curve.points.push_back({fp / neg, tp / pos});
  }
  curve.area = twice_area / 2.0 / (pos * neg);
  return curve;
}

CurveSeries pr_curve(const ScoredPredictions& sp) {
  const double pos = static_cast<double>(sp.positives());
  if (pos == 0.0) {
    throw Error(ErrorKind::no_positives, "precision-recall needs at least one positive");
  }
  CurveSeries curve;
  curve.baseline = sp.prevalence();
  curve.points.push_back({0.0, 1.0});
  double tp = 0.0;
  double fp = 0.0;
  for (const auto& g : threshold_groups(sp.scores(), sp.labels())) {
    tp += static_cast<double>(g.pos);
    fp += static_cast<double>(g.neg);
    curve.points.push_back({tp / pos, tp / (tp + fp)});
  }
  curve.area = auprc(sp.scores(), sp.labels());
  return curve;
}

double auprc(const ScoredPredictions& sp) { return pr_curve(sp).area; }

double auprc(std::span<const double> scores, std::span<const int> labels) {
  check_pair(scores, labels);
  double pos = 0.0;
  for (int y : labels) {
    pos += y == 1 ? 1.0 : 0.0;
  }
  if (pos == 0.0) {
    throw Error(ErrorKind::no_positives, "precision-recall needs at least one positive");
  }
  // Terms and sum carry extended precision; the single final rounding makes
  // small rational cases such as 5/6 come out exact.
  std::size_t tp = 0, fp = 0;
  long double ap = 0.0L;
  for (const auto& g : threshold_groups(scores, labels)) {
    tp += g.pos;
    fp += g.neg;
    const long double gain = static_cast<long double>(g.pos) / static_cast<long double>(pos);
    ap += gain * static_cast<long double>(tp) / static_cast<long double>(tp + fp);
  }
  return static_cast<double>(ap);
}

double brier(const ScoredPredictions& sp) {
  double sum = 0.0;
  for (std::size_t i = 0; i < sp.size(); ++i) {
    const double d = sp.scores()[i] - sp.labels()[i];
    sum += d * d;
  }
  return sum / static_cast<double>(sp.size());
}

CalibrationFit calibration_fit(const ScoredPredictions& sp) {
  constexpr double eps = 1e-6;
  std::vector<double> logits(sp.size());
  std::vector<double> targets(sp.size());
  for (std::size_t i = 0; i < sp.size(); ++i) {
    const double s = std::clamp(sp.scores()[i], eps, 1.0 - eps);
    logits[i] = std::log(s / (1.0 - s));
    targets[i] = sp.labels()[i];
  }
  const auto [lo, hi] = std::minmax_element(logits.begin(), logits.end());
  if (*lo == *hi) {
    throw Error(ErrorKind::degenerate_scores, "all scores are equal after clipping");
  }
  if (sp.positives() == 0 || sp.negatives() == 0) {
    throw Error(ErrorKind::single_class, "calibration fit needs both classes");
  }
  const double prev = sp.prevalence();
  const auto fit = fit_logistic_1d(logits, targets, std::log(prev / (1.0 - prev)));
  return {fit.slope, fit.intercept};
}

std::vector<ReliabilityBin> reliability_bins(const ScoredPredictions& sp, std::size_t n_bins) {
  if (n_bins < 2) {
    throw Error(ErrorKind::config, "reliability diagrams need at least two bins");
  }
  std::vector<ReliabilityBin> bins(n_bins);
  std::vector<double> sum_pred(n_bins, 0.0);
  std::vector<double> sum_obs(n_bins, 0.0);
  for (std::size_t b = 0; b < n_bins; ++b) {
    bins[b].lower = static_cast<double>(b) / static_cast<double>(n_bins);
    bins[b].upper = static_cast<double>(b + 1) / static_cast<double>(n_bins);
  }
  for (std::size_t i = 0; i < sp.size(); ++i) {
    const double s = sp.scores()[i];
    const auto b = std::min(n_bins - 1, static_cast<std::size_t>(s * static_cast<double>(n_bins)));
    bins[b].count += 1;
    sum_pred[b] += s;
    sum_obs[b] += sp.labels()[i];
  }
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (bins[b].count > 0) {
      bins[b].mean_predicted = sum_pred[b] / static_cast<double>(bins[b].count);
      bins[b].observed_frequency = sum_obs[b] / static_cast<double>(bins[b].count);
    }
  }
  return bins;
}

}  // namespace hybridrisk::metrics
