#include "hybridrisk/logistic1d.hpp"

#include <cmath>

#include "hybridrisk/common.hpp"

namespace hybridrisk {

namespace {

// Cross-entropy written in terms of z = a + b x to stay finite for large |z|.
double objective(std::span<const double> x, std::span<const double> t, double a, double b) {
  double f = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = a + b * x[i];
    const double log1pexp = std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
    f += log1pexp - t[i] * z;
  }
  return f;
}

}  // namespace

Logistic1dFit fit_logistic_1d(std::span<const double> x, std::span<const double> targets,
                              double initial_intercept, double tol, int max_iter) {
  constexpr double ridge = 1e-12;
  Logistic1dFit fit;
  double a = initial_intercept;
  double b = 0.0;
  double f = objective(x, targets, a, b);
  const double n = static_cast<double>(x.size());

  for (fit.iterations = 0; fit.iterations < max_iter; ++fit.iterations) {
    double ga = 0.0, gb = 0.0, haa = ridge, hab = 0.0, hbb = ridge;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double p = sigmoid(a + b * x[i]);
      const double r = p - targets[i];
      const double w = p * (1.0 - p);
      ga += r;
      gb += r * x[i];
      haa += w;
      hab += w * x[i];
      hbb += w * x[i] * x[i];
    }
    if (std::abs(ga) / n < tol && std::abs(gb) / n < tol) {
      fit.converged = true;
      break;
    }
    const double det = haa * hbb - hab * hab;
    const double da = -(hbb * ga - hab * gb) / det;
    const double db = -(-hab * ga + haa * gb) / det;
    const double gd = ga * da + gb * db;

    double step = 1.0;
    bool accepted = false;
    while (step >= 1e-10) {
      const double na = a + step * da;
      const double nb = b + step * db;
      const double nf = objective(x, targets, na, nb);
      if (nf < f + 1e-4 * step * gd) {
        a = na;
        b = nb;
        f = nf;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // Line search stalled; the iterate is optimal to machine precision.
      fit.converged = true;
      break;
    }
  }
  fit.intercept = a;
  fit.slope = b;
  return fit;
}

}  // namespace hybridrisk
