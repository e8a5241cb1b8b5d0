#include "hybridrisk/learners/boosting.hpp"

#include <algorithm>
#include <cmath>

namespace hybridrisk::learners {

double mean_log_loss(std::span<const double> margins, std::span<const int> y) {
  double loss = 0.0;
  for (std::size_t i = 0; i < margins.size(); ++i) {
    const double z = margins[i];
    loss += std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))) - (y[i] == 1 ? z : 0.0);
  }
  return margins.empty() ? 0.0 : loss / static_cast<double>(margins.size());
}

GradientBoostingModel train_gbt(const Matrix& x, std::span<const int> y,
                                const BoostingOptions& options) {
  if (x.rows() != y.size()) {
    throw Error(ErrorKind::dimension_mismatch, "feature rows and labels differ in length");
  }
  if (x.rows() == 0) {
    throw Error(ErrorKind::empty_train, "gradient boosting needs at least one row");
  }
  if (options.rounds == 0 || !(options.learning_rate > 0.0)) {
    throw Error(ErrorKind::config, "gradient boosting needs rounds >= 1 and learning_rate > 0");
  }
  const std::size_t n = x.rows();
  double positives = 0.0;
  for (int label : y) {
    positives += label == 1 ? 1.0 : 0.0;
  }
  const double prevalence = std::clamp(positives / static_cast<double>(n), 1e-12, 1.0 - 1e-12);

  GradientBoostingModel model;
  model.base_score = std::log(prevalence / (1.0 - prevalence));
  model.learning_rate = options.learning_rate;
  model.lambda = options.lambda;
  model.gamma = options.gamma;
  model.features = x.cols();
  model.seed = options.seed;

  const SortedColumns sorted(x);
  const BoostingTreeOptions tree_options{options.max_depth, options.lambda, options.gamma,
                                         options.min_child_weight};
  std::vector<double> margin(n, model.base_score);
  std::vector<double> grad(n);
  std::vector<double> hess(n);
  model.training_loss.push_back(mean_log_loss(margin, y));

  for (std::size_t round = 0; round < options.rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(margin[i]);
      grad[i] = p - y[i];
      hess[i] = p * (1.0 - p);
    }
    Tree tree = grow_boosting_tree(x, grad, hess, tree_options, &sorted);
    for (std::size_t i = 0; i < n; ++i) {
      margin[i] += options.learning_rate * tree.predict(x.row(i));
    }
    model.trees.push_back(std::move(tree));
    model.training_loss.push_back(mean_log_loss(margin, y));
  }
  return model;
}

std::vector<double> GradientBoostingModel::margin(const Matrix& x) const {
  require_features(x, features);
  std::vector<double> out(x.rows(), base_score);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    double sum = 0.0;
    for (const auto& tree : trees) {
      sum += tree.predict(row);
    }
    out[r] += learning_rate * sum;
  }
  return out;
}

std::vector<double> GradientBoostingModel::predict_proba(const Matrix& x) const {
  auto out = margin(x);
  for (double& v : out) {
    v = sigmoid(v);
  }
  return out;
}

std::vector<double> predict_gbt_proba(const GradientBoostingModel& model, const Matrix& x) {
  return model.predict_proba(x);
}

nlohmann::json GradientBoostingModel::to_json() const {
  nlohmann::json tree_list = nlohmann::json::array();
  for (const auto& tree : trees) {
    tree_list.push_back(tree.to_json());
  }
  return {{"type", "gradient_boosting"},
          {"base_score", base_score},
          {"learning_rate", learning_rate},
          {"lambda", lambda},
          {"gamma", gamma},
          {"n_features", features},
          {"seed", seed},
          {"training_loss", training_loss},
          {"trees", std::move(tree_list)}};
}

GradientBoostingModel GradientBoostingModel::from_json(const nlohmann::json& j) {
  GradientBoostingModel m;
  m.base_score = j.at("base_score").get<double>();
  m.learning_rate = j.at("learning_rate").get<double>();
  m.lambda = j.at("lambda").get<double>();
  m.gamma = j.at("gamma").get<double>();
  m.features = j.at("n_features").get<std::size_t>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.training_loss = j.value("training_loss", std::vector<double>{});
  for (const auto& t : j.at("trees")) {
    m.trees.push_back(Tree::from_json(t));
  }
  if (m.trees.empty()) {
    throw Error(ErrorKind::corrupt_file, "boosting model without trees");
  }
  return m;
}

}  // namespace hybridrisk::learners
