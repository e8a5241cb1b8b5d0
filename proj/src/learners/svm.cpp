#include "hybridrisk/learners/svm.hpp"

#include <cmath>
#include <limits>
#include <list>

namespace hybridrisk::learners {

namespace {

constexpr double kTau = 1e-12;

// LRU cache of kernel matrix columns.
class KernelCache {
 public:
  KernelCache(const Matrix& x, double gamma, std::size_t megabytes)
      : x_(x), gamma_(gamma), slot_of_(x.rows(), kNone) {
    const std::size_t column_bytes = std::max<std::size_t>(1, x.rows()) * sizeof(double);
    capacity_ = std::max<std::size_t>(2, megabytes * 1024 * 1024 / column_bytes);
    capacity_ = std::min(capacity_, x.rows());
    // Callers hold references to two columns at once; slots must not move.
    slots_.reserve(capacity_);
  }

  const std::vector<double>& column(std::size_t i) {
    if (slot_of_[i] != kNone) {
      auto& slot = slots_[slot_of_[i]];
      lru_.splice(lru_.end(), lru_, slot.position);
      return slot.values;
    }
    std::size_t s;
    if (slots_.size() < capacity_) {
      s = slots_.size();
      slots_.push_back({});
      slots_[s].values.resize(x_.rows());
    } else {
      s = lru_.front();
      lru_.pop_front();
      slot_of_[slots_[s].owner] = kNone;
    }
    auto& slot = slots_[s];
    slot.owner = i;
    const auto xi = x_.row(i);
    for (std::size_t k = 0; k < x_.rows(); ++k) {
      slot.values[k] = rbf_kernel(xi, x_.row(k), gamma_);
    }
    lru_.push_back(s);
    slot.position = std::prev(lru_.end());
    slot_of_[i] = s;
    return slot.values;
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  struct Slot {
    std::size_t owner = kNone;
    std::vector<double> values;
    std::list<std::size_t>::iterator position;
  };

  const Matrix& x_;
  double gamma_;
  std::size_t capacity_ = 2;
  std::vector<std::size_t> slot_of_;
  std::vector<Slot> slots_;
  std::list<std::size_t> lru_;
};

}  // namespace

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  double dist2 = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    dist2 += d * d;
  }
  return std::exp(-gamma * dist2);
}

double default_gamma(const Matrix& x) {
  const std::size_t p = x.cols();
  if (p == 0 || x.rows() == 0) {
    return 1.0;
  }
  double total_variance = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      mean += x(i, j);
    }
    mean /= static_cast<double>(x.rows());
    double var = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      var += (x(i, j) - mean) * (x(i, j) - mean);
    }
    total_variance += var / static_cast<double>(x.rows());
  }
  const double mean_variance = total_variance / static_cast<double>(p);
  return mean_variance > 0.0 ? 1.0 / (static_cast<double>(p) * mean_variance)
                             : 1.0 / static_cast<double>(p);
}

std::vector<int> to_signed_labels(std::span<const int> labels01) {
  std::vector<int> out(labels01.size());
  for (std::size_t i = 0; i < labels01.size(); ++i) {
    out[i] = labels01[i] == 1 ? 1 : -1;
  }
  return out;
}

SvmModel train_svm(const Matrix& x, std::span<const int> y_signed, const SvmOptions& options) {
  const std::size_t n = x.rows();
  if (n != y_signed.size()) {
    throw Error(ErrorKind::dimension_mismatch, "feature rows and labels differ in length");
  }
  if (n < 2) {
    throw Error(ErrorKind::empty_train, "SVM needs at least two rows");
  }
  bool has_pos = false, has_neg = false;
  for (int label : y_signed) {
    if (label != 1 && label != -1) {
      throw Error(ErrorKind::config, "SVM labels must be -1/+1");
    }
    (label == 1 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) {
    throw Error(ErrorKind::constant_outcome, "SVM training data has a single class");
  }

  const double c = options.c;
  const double gamma = options.gamma > 0.0 ? options.gamma : default_gamma(x);
  const std::size_t max_iter =
      options.max_iterations > 0 ? options.max_iterations : std::max<std::size_t>(10'000'000, 100 * n);

  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);  // gradient of 1/2 a'Qa - e'a at a = 0
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<double>(y_signed[i]);
  }
  KernelCache cache(x, gamma, options.cache_megabytes);
  auto upper = [&](std::size_t t) { return alpha[t] >= c; };
  auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

  std::size_t iter = 0;
  bool converged = false;
  for (; iter < max_iter; ++iter) {
    // Working set: i maximizes the violation, j minimizes the second-order
    // objective decrease among pairs with i.
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] > 0 ? !upper(t) : !lower(t)) {
        const double v = -y[t] * grad[t];
        if (v >= gmax) {
          gmax = v;
          i = t;
        }
      }
    }
    if (i == n) {
      converged = true;
      break;
    }
    const std::vector<double>& ki = cache.column(i);
    double gmax2 = -std::numeric_limits<double>::infinity();
    double best_obj = std::numeric_limits<double>::infinity();
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] > 0 ? !lower(t) : !upper(t)) {
        const double v = y[t] * grad[t];
        gmax2 = std::max(gmax2, v);
        const double diff = gmax + v;
        if (diff > 0.0) {
          double quad = 2.0 - 2.0 * ki[t];  // K_ii + K_tt - 2 K_it, RBF diagonal is 1
          if (quad <= 0.0) {
            quad = kTau;
          }
          const double obj = -(diff * diff) / quad;
          if (obj <= best_obj) {
            best_obj = obj;
            j = t;
          }
        }
      }
    }
    if (gmax + gmax2 < options.tol || j == n) {
      converged = true;
      break;
    }

    const std::vector<double>& kj = cache.column(j);
    const double kij = ki[j];
    const double old_i = alpha[i];
    const double old_j = alpha[j];
    if (y[i] != y[j]) {
      // Q_ii + Q_jj + 2 Q_ij with Q_ij = y_i y_j K_ij = -K_ij
      double quad = 2.0 - 2.0 * kij;
      if (quad <= 0.0) {
        quad = kTau;
      }
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double quad = 2.0 - 2.0 * kij;
      if (quad <= 0.0) {
        quad = kTau;
      }
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }

    const double di = alpha[i] - old_i;
    const double dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) {
      grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
    }
  }
  if (!converged) {
    warn("SMO stopped at the iteration cap (" + std::to_string(max_iter) +
         ") before reaching tolerance; returning the last iterate");
  }

  // Bias from the free support vectors, midpoint of the feasible range otherwise.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (upper(t)) {
      if (y[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      free_sum += yg;
      ++free_count;
    }
  }
  const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : (ub + lb) / 2.0;

  SvmModel model;
  model.gamma = gamma;
  model.c = c;
  model.bias = -rho;
  model.iterations = iter;
  model.converged = converged;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0.0) {
      model.support_vectors.append_row(x.row(t));
      model.dual_coef.push_back(alpha[t] * y[t]);
    }
  }
  if (model.support_vectors.rows() == 0) {
    model.support_vectors = Matrix(0, x.cols());
  }
  return model;
}

std::vector<double> svm_decision_value(const SvmModel& model, const Matrix& x) {
  require_features(x, model.n_features());
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    double f = model.bias;
    for (std::size_t s = 0; s < model.dual_coef.size(); ++s) {
      f += model.dual_coef[s] * rbf_kernel(model.support_vectors.row(s), row, model.gamma);
    }
    out[r] = f;
  }
  return out;
}

std::vector<double> CalibratedSvm::predict_proba(const Matrix& x) const {
  return apply_platt(calibrator_, svm_decision_value(svm_, x));
}

nlohmann::json SvmModel::to_json() const {
  std::vector<std::vector<double>> vectors;
  for (std::size_t s = 0; s < support_vectors.rows(); ++s) {
    const auto row = support_vectors.row(s);
    vectors.emplace_back(row.begin(), row.end());
  }
  return {{"type", "svm"},
          {"kernel", "rbf"},
          {"gamma", gamma},
          {"c", c},
          {"bias", bias},
          {"iterations", iterations},
          {"converged", converged},
          {"n_features", support_vectors.cols()},
          {"dual_coef", dual_coef},
          {"support_vectors", vectors}};
}

SvmModel SvmModel::from_json(const nlohmann::json& j) {
  SvmModel m;
  m.gamma = j.at("gamma").get<double>();
  m.c = j.at("c").get<double>();
  m.bias = j.at("bias").get<double>();
  m.iterations = j.value("iterations", std::size_t{0});
  m.converged = j.value("converged", true);
  m.dual_coef = j.at("dual_coef").get<std::vector<double>>();
  m.support_vectors = Matrix(0, j.at("n_features").get<std::size_t>());
  for (const auto& row : j.at("support_vectors")) {
    const auto values = row.get<std::vector<double>>();
    m.support_vectors.append_row(values);
  }
  if (m.support_vectors.rows() != m.dual_coef.size()) {
    throw Error(ErrorKind::corrupt_file, "support vector count differs from coefficient count");
  }
  return m;
}

}  // namespace hybridrisk::learners
