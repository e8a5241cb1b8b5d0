#pragma once

#include <span>

namespace hybridrisk {

struct Logistic1dFit {
  double intercept = 0.0;
  double slope = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Two-parameter logistic fit: minimizes the cross-entropy of targets t in
/// [0, 1] against sigmoid(intercept + slope * x). Newton with backtracking and
/// a tiny ridge on the Hessian diagonal.
Logistic1dFit fit_logistic_1d(std::span<const double> x, std::span<const double> targets,
                              double initial_intercept, double tol = 1e-10, int max_iter = 100);

}  // namespace hybridrisk
