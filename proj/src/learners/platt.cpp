#include "hybridrisk/learners/platt.hpp"

#include <algorithm>
#include <cmath>

#include "hybridrisk/common.hpp"
#include "hybridrisk/logistic1d.hpp"

namespace hybridrisk::learners {

double PlattCalibrator::apply(double margin) const { return sigmoid(slope * margin + intercept); }

PlattCalibrator fit_platt(std::span<const double> margins, std::span<const int> y, double tol) {
  if (margins.size() != y.size()) {
    throw Error(ErrorKind::dimension_mismatch, "margins and labels differ in length");
  }
  if (margins.empty()) {
    throw Error(ErrorKind::empty_train, "Platt scaling needs at least one margin");
  }
  double positives = 0.0;
  for (int label : y) {
    positives += label == 1 ? 1.0 : 0.0;
  }
  const double negatives = static_cast<double>(y.size()) - positives;

  const auto [lo, hi] = std::minmax_element(margins.begin(), margins.end());
  if (*lo == *hi) {
    const double prevalence =
        std::clamp(positives / static_cast<double>(y.size()), 1e-12, 1.0 - 1e-12);
    return PlattCalibrator{0.0, std::log(prevalence / (1.0 - prevalence)), true};
  }

  const double hi_target = (positives + 1.0) / (positives + 2.0);
  const double lo_target = 1.0 / (negatives + 2.0);
  std::vector<double> targets(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    targets[i] = y[i] == 1 ? hi_target : lo_target;
  }
  const auto fit =
      fit_logistic_1d(margins, targets, std::log((positives + 1.0) / (negatives + 1.0)), tol);
  if (!fit.converged) {
    warn("Platt scaling reached its iteration limit");
  }
  return PlattCalibrator{fit.slope, fit.intercept, false};
}

std::vector<double> apply_platt(const PlattCalibrator& calibrator,
                                std::span<const double> margins) {
  std::vector<double> out(margins.size());
  std::transform(margins.begin(), margins.end(), out.begin(),
                 [&](double m) { return calibrator.apply(m); });
  return out;
}

nlohmann::json PlattCalibrator::to_json() const {
  return {{"slope", slope}, {"intercept", intercept}, {"degenerate", degenerate}};
}

PlattCalibrator PlattCalibrator::from_json(const nlohmann::json& j) {
  return PlattCalibrator{j.at("slope").get<double>(), j.at("intercept").get<double>(),
                         j.value("degenerate", false)};
}

}  // namespace hybridrisk::learners
