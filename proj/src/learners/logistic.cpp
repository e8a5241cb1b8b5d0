#include "hybridrisk/learners/logistic.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace hybridrisk::learners {

namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double linear_term(std::span<const double> params, std::span<const double> row) {
  double z = params[0];
  for (std::size_t j = 0; j < row.size(); ++j) {
    z += params[j + 1] * row[j];
  }
  return z;
}

void check_inputs(const Matrix& x, std::span<const int> y) {
  if (x.rows() != y.size()) {
    throw Error(ErrorKind::dimension_mismatch, "feature rows and labels differ in length");
  }
  if (x.rows() == 0) {
    throw Error(ErrorKind::empty_train, "logistic regression needs at least one row");
  }
  for (double v : x.values()) {
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::config, "logistic regression requires finite features");
    }
  }
}

constexpr double kSeparationBound = 1e6;

}  // namespace

double logistic_objective(std::span<const double> params, const Matrix& x, std::span<const int> y,
                          double l2) {
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double z = linear_term(params, x.row(i));
    loss += softplus(z) - (y[i] == 1 ? z : 0.0);
  }
  loss /= static_cast<double>(x.rows());
  double penalty = 0.0;
  for (std::size_t j = 1; j < params.size(); ++j) {
    penalty += params[j] * params[j];
  }
  return loss + 0.5 * l2 * penalty;
}

std::vector<double> logistic_gradient(std::span<const double> params, const Matrix& x,
                                      std::span<const int> y, double l2) {
  const std::size_t p = x.cols();
  std::vector<double> grad(p + 1, 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    const double residual = sigmoid(linear_term(params, row)) - y[i];
    grad[0] += residual;
    for (std::size_t j = 0; j < p; ++j) {
      grad[j + 1] += residual * row[j];
    }
  }
  const double n = static_cast<double>(x.rows());
  for (std::size_t j = 0; j <= p; ++j) {
    grad[j] /= n;
    if (j > 0) {
      grad[j] += l2 * params[j];
    }
  }
  return grad;
}

LogisticModel train_logistic(const Matrix& x, std::span<const int> y,
                             const LogisticOptions& options) {
  check_inputs(x, y);
  const std::size_t p = x.cols();
  const std::size_t dim = p + 1;
  const double n = static_cast<double>(x.rows());

  std::vector<double> params(dim, 0.0);
  double objective = logistic_objective(params, x, y, options.l2);
  LogisticModel model;
  model.l2 = options.l2;

  int iter = 0;
  double grad_norm = 0.0;
  for (;; ++iter) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                                 static_cast<Eigen::Index>(dim));
    Eigen::VectorXd xi(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const auto row = x.row(i);
      xi(0) = 1.0;
      for (std::size_t j = 0; j < p; ++j) {
        xi(static_cast<Eigen::Index>(j + 1)) = row[j];
      }
      const double prob = sigmoid(linear_term(params, row));
      grad.noalias() += (prob - y[i]) * xi;
      hess.selfadjointView<Eigen::Lower>().rankUpdate(xi, prob * (1.0 - prob));
    }
    hess = hess.selfadjointView<Eigen::Lower>();
    grad /= n;
    hess /= n;
    for (std::size_t j = 1; j < dim; ++j) {
      const auto k = static_cast<Eigen::Index>(j);
      grad(k) += options.l2 * params[j];
      hess(k, k) += options.l2;
    }
    grad_norm = grad.norm();
    if (grad_norm <= options.tol || iter >= options.max_iter) {
      break;
    }

    Eigen::LDLT<Eigen::MatrixXd> solver(hess);
    Eigen::VectorXd step = solver.solve(grad);
    if (solver.info() != Eigen::Success || !step.allFinite()) {
      hess.diagonal().array() += 1e-10;
      step = hess.ldlt().solve(grad);
    }

    // Step halving keeps every accepted iterate a descent step.
    double scale = 1.0;
    std::vector<double> trial(dim);
    double trial_objective = objective;
    for (int halving = 0; halving < 50; ++halving) {
      for (std::size_t j = 0; j < dim; ++j) {
        trial[j] = params[j] - scale * step(static_cast<Eigen::Index>(j));
      }
      trial_objective = logistic_objective(trial, x, y, options.l2);
      if (trial_objective <= objective) {
        break;
      }
      scale *= 0.5;
    }
    if (trial_objective > objective) {
      break;  // no further progress representable in floating point
    }
    params = trial;
    objective = trial_objective;

    for (std::size_t j = 1; j < dim; ++j) {
      if (std::abs(params[j]) > kSeparationBound) {
        throw Error(ErrorKind::separation_detected,
                    "coefficient " + std::to_string(j - 1) +
                        " diverging; the classes are separable, use l2 > 0");
      }
    }
  }

  model.intercept = params[0];
  model.coefficients.assign(params.begin() + 1, params.end());
  model.iterations = iter;
  model.gradient_norm = grad_norm;
  return model;
}

std::vector<double> LogisticModel::predict_proba(const Matrix& x) const {
  require_features(x, coefficients.size());
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    double z = intercept;
    for (std::size_t j = 0; j < row.size(); ++j) {
      z += coefficients[j] * row[j];
    }
    out[i] = sigmoid(z);
  }
  return out;
}

std::vector<double> predict_logistic(const LogisticModel& model, const Matrix& x) {
  return model.predict_proba(x);
}

nlohmann::json LogisticModel::to_json() const {
  return {{"type", "logistic"},
          {"intercept", intercept},
          {"coefficients", coefficients},
          {"l2", l2},
          {"iterations", iterations},
          {"gradient_norm", gradient_norm}};
}

LogisticModel LogisticModel::from_json(const nlohmann::json& j) {
  LogisticModel m;
  m.intercept = j.at("intercept").get<double>();
  m.coefficients = j.at("coefficients").get<std::vector<double>>();
  m.l2 = j.at("l2").get<double>();
  m.iterations = j.value("iterations", 0);
  m.gradient_norm = j.value("gradient_norm", 0.0);
  return m;
}

}  // namespace hybridrisk::learners
