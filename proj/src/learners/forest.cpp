#include "hybridrisk/learners/forest.hpp"

#include <algorithm>
#include <cmath>

namespace hybridrisk::learners {

namespace {

// Stream ids keep bootstrap draws and split-feature draws independent.
constexpr std::uint64_t kBootstrapStream = 0;
constexpr std::uint64_t kSplitStream = 1;

std::uint64_t tree_seed(std::uint64_t forest_seed, std::size_t t, std::uint64_t stream) {
  return derive_seed(derive_seed(forest_seed, t), stream);
}

}  // namespace

std::vector<double> bootstrap_weights(std::size_t rows, std::uint64_t forest_seed, std::size_t t) {
  Rng rng(tree_seed(forest_seed, t, kBootstrapStream));
  std::vector<double> weights(rows, 0.0);
  for (std::size_t k = 0; k < rows; ++k) {
    weights[rng.below(rows)] += 1.0;
  }
  return weights;
}

RandomForestModel train_random_forest(const Matrix& x, std::span<const int> y,
                                      const ForestOptions& options) {
  if (x.rows() != y.size()) {
    throw Error(ErrorKind::dimension_mismatch, "feature rows and labels differ in length");
  }
  if (x.rows() == 0) {
    throw Error(ErrorKind::empty_train, "random forest needs at least one row");
  }
  if (options.trees == 0) {
    throw Error(ErrorKind::config, "random forest needs at least one tree");
  }
  RandomForestModel model;
  model.features = x.cols();
  model.seed = options.seed;
  model.mtry = options.mtry > 0
                   ? std::min(options.mtry, x.cols())
                   : std::max<std::size_t>(1, static_cast<std::size_t>(
                                                  std::floor(std::sqrt(static_cast<double>(x.cols())))));
  model.trees.resize(options.trees);

  const SortedColumns sorted(x);
  const ClassificationTreeOptions tree_options{options.max_depth, options.min_leaf, model.mtry};
  parallel_for(
      options.trees,
      [&](std::size_t t) {
        const std::vector<double> weights = options.bootstrap
                                                ? bootstrap_weights(x.rows(), options.seed, t)
                                                : std::vector<double>(x.rows(), 1.0);
        model.trees[t] = grow_classification_tree(x, y, weights, tree_options,
                                                  tree_seed(options.seed, t, kSplitStream), &sorted);
      },
      options.threads);
  return model;
}

std::vector<double> RandomForestModel::predict_proba(const Matrix& x) const {
  require_features(x, features);
  std::vector<double> out(x.rows(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    double sum = 0.0;
    for (const auto& tree : trees) {
      sum += tree.predict(row);
    }
    out[r] = sum / static_cast<double>(trees.size());
  }
  return out;
}

std::vector<double> predict_rf_proba(const RandomForestModel& model, const Matrix& x) {
  return model.predict_proba(x);
}

nlohmann::json RandomForestModel::to_json() const {
  nlohmann::json tree_list = nlohmann::json::array();
  for (const auto& tree : trees) {
    tree_list.push_back(tree.to_json());
  }
  return {{"type", "random_forest"},
          {"n_features", features},
          {"mtry", mtry},
          {"seed", seed},
          {"trees", std::move(tree_list)}};
}

RandomForestModel RandomForestModel::from_json(const nlohmann::json& j) {
  RandomForestModel m;
  m.features = j.at("n_features").get<std::size_t>();
  m.mtry = j.at("mtry").get<std::size_t>();
  m.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& t : j.at("trees")) {
    m.trees.push_back(Tree::from_json(t));
  }
  if (m.trees.empty()) {
    throw Error(ErrorKind::corrupt_file, "random forest without trees");
  }
  return m;
}

}  // namespace hybridrisk::learners
