#pragma once

#include <span>
#include <vector>

#include "json.hpp"

namespace hybridrisk::learners {

/// Sigmoid map from a classifier margin to a probability:
/// p = sigmoid(slope * margin + intercept).
struct PlattCalibrator {
  double slope = 0.0;
  double intercept = 0.0;
  /// Set when the margins carried no ranking information; the output is then
  /// the constant training prevalence.
  bool degenerate = false;

  double apply(double margin) const;

  nlohmann::json to_json() const;
  static PlattCalibrator from_json(const nlohmann::json& j);

  bool operator==(const PlattCalibrator&) const = default;
};

/// Platt's method with smoothed targets (N+ + 1)/(N+ + 2) and 1/(N- + 2),
/// which acts as the penalty that keeps the fit finite on separable margins.
PlattCalibrator fit_platt(std::span<const double> margins, std::span<const int> y,
                          double tol = 1e-10);

std::vector<double> apply_platt(const PlattCalibrator& calibrator,
                                std::span<const double> margins);

}  // namespace hybridrisk::learners
