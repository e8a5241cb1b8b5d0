#include "hybridrisk/runner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "hybridrisk/ensemble.hpp"
#include "hybridrisk/inference.hpp"
#include "hybridrisk/io.hpp"
#include "hybridrisk/metrics.hpp"
#include "hybridrisk/plot.hpp"
#include "hybridrisk/preprocess.hpp"

namespace hybridrisk::runner {

using nlohmann::json;
using preprocess::FrozenPipeline;

namespace {

constexpr const char* kHybridBoosted = "xgb_rf";
constexpr const char* kHybridMargin = "svm_lr";

// ---- config parsing -------------------------------------------------------

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const std::string& where) {
  if (!j.is_object()) {
    throw Error(ErrorKind::config, where + " must be an object");
  }
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw Error(ErrorKind::config, "unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& target) {
  if (j.contains(key)) {
    target = j.at(key).get<T>();
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal();
}

CohortFiles read_cohort(const json& j, const fs::path& base, const std::string& where) {
  reject_unknown(j, {"data", "schema"}, where);
  return {resolve(base, j.at("data").get<std::string>()),
          resolve(base, j.at("schema").get<std::string>())};
}

// ---- small helpers --------------------------------------------------------

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json distribution_json(const tabular::ClassDistribution& d) {
  return {{"count_neg", d.count_neg}, {"count_pos", d.count_pos}, {"prevalence", d.prevalence}};
}

Matrix select_rows(const Matrix& x, const std::vector<std::size_t>& rows) {
  Matrix out(rows.size(), x.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    std::copy(x.row(rows[k]).begin(), x.row(rows[k]).end(), out.row(k).begin());
  }
  return out;
}

std::vector<int> select(const std::vector<int>& v, const std::vector<std::size_t>& rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) {
    out.push_back(v[r]);
  }
  return out;
}

// Seeded class-proportional subsample of `size` rows; returned sorted.
std::vector<std::size_t> stratified_subsample(const std::vector<int>& y, std::size_t size,
                                              std::uint64_t seed) {
  if (size >= y.size()) {
    std::vector<std::size_t> all(y.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
      all[i] = i;
    }
    return all;
  }
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < y.size(); ++i) {
    by_class[y[i]].push_back(i);
  }
  const double share = static_cast<double>(by_class[1].size()) / static_cast<double>(y.size());
  std::size_t take_pos = static_cast<std::size_t>(std::llround(share * static_cast<double>(size)));
  take_pos = std::min(take_pos, by_class[1].size());
  const std::size_t take_neg = std::min(size - take_pos, by_class[0].size());
  Rng rng(seed);
  std::vector<std::size_t> out;
  for (int c : {0, 1}) {
    auto& rows = by_class[c];
    rng.shuffle(rows);
    const std::size_t take = c == 1 ? take_pos : take_neg;
    out.insert(out.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Majority class reduced to the minority count; original order kept.
std::vector<std::size_t> balanced_positions(const std::vector<int>& y, std::uint64_t seed) {
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < y.size(); ++i) {
    by_class[y[i]].push_back(i);
  }
  const int majority = by_class[1].size() > by_class[0].size() ? 1 : 0;
  Rng rng(seed);
  rng.shuffle(by_class[majority]);
  by_class[majority].resize(by_class[1 - majority].size());
  std::vector<std::size_t> out(by_class[0].begin(), by_class[0].end());
  out.insert(out.end(), by_class[1].begin(), by_class[1].end());
  std::sort(out.begin(), out.end());
  return out;
}

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

// Forests run to hundreds of megabytes when indented.
void write_model(const fs::path& path, const json& j) { write_file_atomic(path, j.dump() + "\n"); }

json read_json(const fs::path& path, ErrorKind kind_if_missing) {
  if (!fs::exists(path)) {
    throw Error(kind_if_missing, "missing " + path.string());
  }
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::corrupt_file, path.string() + ": " + e.what());
  }
}

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) {
    throw Error(ErrorKind::config, what + " not found: " + path.string());
  }
}

tabular::Dataset load_primary(const ExperimentConfig& config) {
  const auto schema = tabular::load_schema(config.primary.schema);
  return tabular::load_csv(config.primary.data, schema, tabular::Cohort::primary);
}

// ---- bundle ---------------------------------------------------------------

const std::vector<std::string>& parameter_files() {
  static const std::vector<std::string> files{
      "pipeline.json",          "models/logistic.json", "models/svm.json",
      "models/random_forest.json", "models/gradient_boosting.json",
      "models/xgb_rf.json",     "models/svm_lr.json"};
  return files;
}

struct LoadedBundle {
  fs::path dir;
  ExperimentConfig config;
  json manifest;
  std::unique_ptr<const FrozenPipeline> pipeline;
  std::map<std::string, ModelPtr> members;
  std::unique_ptr<const ensemble::VotingEnsemble> boosted;
  std::unique_ptr<const ensemble::VotingEnsemble> margin;
  std::map<std::string, std::string> fingerprints;
};

ensemble::VotingEnsemble load_ensemble(const json& j, const std::map<std::string, ModelPtr>& members) {
  std::vector<ensemble::Member> list;
  for (const auto& m : j.at("members")) {
    const auto kind = m.at("model").get<std::string>();
    const auto it = members.find(kind);
    if (it == members.end()) {
      throw Error(ErrorKind::corrupt_file, "ensemble references unknown model " + kind);
    }
    list.push_back({it->second, m.at("weight").get<double>()});
  }
  return ensemble::VotingEnsemble(j.at("name").get<std::string>(), std::move(list));
}

LoadedBundle load_bundle(const fs::path& dir) {
  LoadedBundle b;
  b.dir = dir;
  if (!fs::is_directory(dir)) {
    throw Error(ErrorKind::config, "bundle directory not found: " + dir.string());
  }
  for (const auto& f : parameter_files()) {
    if (!fs::exists(dir / f)) {
      throw Error(ErrorKind::corrupt_file, "bundle is missing " + f);
    }
    b.fingerprints[f] = file_fingerprint(dir / f);
  }
  b.manifest = read_json(dir / "manifest.json", ErrorKind::corrupt_file);
  b.config = ExperimentConfig::from_json(read_json(dir / "config.json", ErrorKind::corrupt_file), dir);
  b.pipeline = std::make_unique<const FrozenPipeline>(preprocess::load_pipeline(dir / "pipeline.json"));
  if (!b.pipeline->calibration()) {
    throw Error(ErrorKind::corrupt_file, "pipeline carries no SVM calibration");
  }
  try {
    auto lr = std::make_shared<const learners::LogisticModel>(
        learners::LogisticModel::from_json(read_json(dir / "models/logistic.json", ErrorKind::corrupt_file)));
    auto svm = std::make_shared<const learners::CalibratedSvm>(
        learners::SvmModel::from_json(read_json(dir / "models/svm.json", ErrorKind::corrupt_file)),
        *b.pipeline->calibration());
    auto rf = std::make_shared<const learners::RandomForestModel>(learners::RandomForestModel::from_json(
        read_json(dir / "models/random_forest.json", ErrorKind::corrupt_file)));
    auto gbt = std::make_shared<const learners::GradientBoostingModel>(
        learners::GradientBoostingModel::from_json(
            read_json(dir / "models/gradient_boosting.json", ErrorKind::corrupt_file)));
    b.members = {{"logistic", lr}, {"svm", svm}, {"random_forest", rf}, {"gradient_boosting", gbt}};
    b.boosted = std::make_unique<const ensemble::VotingEnsemble>(
        load_ensemble(read_json(dir / "models/xgb_rf.json", ErrorKind::corrupt_file), b.members));
    b.margin = std::make_unique<const ensemble::VotingEnsemble>(
        load_ensemble(read_json(dir / "models/svm_lr.json", ErrorKind::corrupt_file), b.members));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::corrupt_file, std::string("malformed model file: ") + e.what());
  }
  for (const auto& [name, model] : b.members) {
    if (model->n_features() != b.pipeline->n_features()) {
      throw Error(ErrorKind::corrupt_file, name + " does not match the pipeline feature count");
    }
  }
  return b;
}

// Evaluation must not touch fitted parameters; checked after every run.
void assert_unchanged(const LoadedBundle& b) {
  for (const auto& [file, fp] : b.fingerprints) {
    if (file_fingerprint(b.dir / file) != fp) {
      throw Error(ErrorKind::leakage_guard, "bundle parameter file changed during evaluation: " + file);
    }
  }
}

// ---- evaluation -----------------------------------------------------------

void write_curve_csv(const fs::path& path, const char* header, const std::vector<metrics::CurvePoint>& pts) {
  std::string out = std::string(header) + "\n";
  for (const auto& p : pts) {
    out += format_double(p.x) + "," + format_double(p.y) + "\n";
  }
  write_file_atomic(path, out);
}

json bins_json(const std::vector<metrics::ReliabilityBin>& bins) {
  json out = json::array();
  for (const auto& b : bins) {
    out.push_back({{"lower", b.lower},
                   {"upper", b.upper},
                   {"mean_predicted", b.mean_predicted},
                   {"observed_frequency", b.observed_frequency},
                   {"count", b.count}});
  }
  return out;
}

json ci_json(const inference::BootstrapResult& r) { return json::array({r.lower, r.upper}); }

json score_model(const std::string& cohort, const std::string& name, const std::vector<double>& probs,
                 const std::vector<int>& labels, double tau, std::size_t resamples,
                 std::uint64_t seed, const fs::path& curve_dir) {
  const metrics::ScoredPredictions sp(probs, labels, cohort);
  const auto roc = metrics::roc_curve(sp);
  const auto pr = metrics::pr_curve(sp);
  const auto counts = metrics::confusion_at_threshold(sp, tau);
  const auto t = metrics::thresholded_metrics(counts);
  json j;
  j["auroc"] = metrics::auroc(sp);
  j["auprc"] = pr.area;
  j["pr_baseline"] = pr.baseline;
  j["brier"] = metrics::brier(sp);
  try {
    const auto cal = metrics::calibration_fit(sp);
    j["cal_slope"] = cal.slope;
    j["cal_intercept"] = cal.intercept;
  } catch (const Error& e) {
    j["cal_slope"] = nullptr;
    j["cal_intercept"] = nullptr;
    j["cal_note"] = e.what();
  }
  const auto auroc_ci = inference::bootstrap_ci(
      [](const metrics::ScoredPredictions& s) { return metrics::auroc(s); }, sp, resamples, seed);
  const auto auprc_ci = inference::bootstrap_ci(
      [](const metrics::ScoredPredictions& s) { return metrics::auprc(s); }, sp, resamples, seed);
  j["auroc_ci"] = ci_json(auroc_ci);
  j["auprc_ci"] = ci_json(auprc_ci);
  j["thresholded"] = {{"tau", tau},
                      {"accuracy", t.accuracy},
                      {"precision", t.precision},
                      {"recall", t.recall},
                      {"f1", t.f1}};
  j["confusion"] = {{"tp", counts.tp}, {"fp", counts.fp}, {"fn", counts.fn}, {"tn", counts.tn}};
  j["reliability"] = bins_json(metrics::reliability_bins(sp));

  write_curve_csv(curve_dir / (cohort + "_" + name + "_roc.csv"), "fpr,tpr", roc.points);
  write_curve_csv(curve_dir / (cohort + "_" + name + "_pr.csv"), "recall,precision", pr.points);
  return j;
}

json evaluate_cohort(const LoadedBundle& b, const preprocess::ProcessedData& data,
                     const std::string& cohort, double tau, std::size_t resamples,
                     std::uint64_t seed) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw Error(ErrorKind::config, "tau must lie in (0, 1)");
  }
  if (resamples < 1) {
    throw Error(ErrorKind::config, "bootstrap needs at least one resample");
  }
  if (resamples < 100) {
    warn("bootstrap with fewer than 100 resamples; intervals are unreliable");
  }
  const auto& x = data.features;
  const auto& y = data.labels;
  const auto dist = tabular::class_distribution(y);
  if (dist.count_pos == 0 || dist.count_neg == 0) {
    throw Error(ErrorKind::single_class, cohort + " cohort contains a single outcome class");
  }
  const fs::path curve_dir = b.dir / "reports" / "curves";

  const auto p_boosted = b.boosted->predict_proba(x);
  const auto p_margin = b.margin->predict_proba(x);

  json report;
  report["cohort"] = cohort;
  report["n"] = y.size();
  report["prevalence"] = dist.prevalence;
  report["count_pos"] = dist.count_pos;
  report["count_neg"] = dist.count_neg;
  report["out_of_range_fraction"] = data.out_of_range_fraction;
  report["filled_columns"] = data.filled_columns;
  report["dropped_columns"] = data.dropped_columns;
  report["bootstrap"] = {{"resamples", resamples},
                         {"seed", seed},
                         {"method", "percentile, stratified by outcome"}};
  report["models"][kHybridBoosted] =
      score_model(cohort, kHybridBoosted, p_boosted, y, tau, resamples, seed, curve_dir);
  report["models"][kHybridMargin] =
      score_model(cohort, kHybridMargin, p_margin, y, tau, resamples, seed, curve_dir);

  for (const auto& [name, model] : b.members) {
    const metrics::ScoredPredictions sp(model->predict_proba(x), y, cohort);
    report["members"][name] = {{"auroc", metrics::auroc(sp)},
                               {"auprc", metrics::auprc(sp)},
                               {"brier", metrics::brier(sp)}};
  }

  const auto delong = inference::delong_test(p_boosted, p_margin, y);
  const auto mcnemar = inference::mcnemar_test(ensemble::classify(p_boosted, tau),
                                               ensemble::classify(p_margin, tau), y);
  report["tests"]["delong"] = {{"models", {kHybridBoosted, kHybridMargin}},
                               {"delta_auc", delong.delta_auc},
                               {"z", delong.statistic},
                               {"variance", delong.variance},
                               {"p", delong.p_value}};
  report["tests"]["mcnemar"] = {{"models", {kHybridBoosted, kHybridMargin}},
                                {"b", mcnemar.b},
                                {"c", mcnemar.c},
                                {"statistic", mcnemar.statistic},
                                {"p", mcnemar.p_value},
                                {"method", mcnemar.b + mcnemar.c >= 25 ? "chi-square, continuity corrected"
                                                                       : "exact binomial"}};
  return report;
}

// ---- report rendering -----------------------------------------------------

std::vector<metrics::CurvePoint> read_curve_csv(const fs::path& path) {
  std::vector<metrics::CurvePoint> pts;
  if (!fs::exists(path)) {
    return pts;
  }
  std::istringstream in(read_file(path));
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      continue;
    }
    pts.push_back({std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
  }
  return pts;
}

std::string fixed(double v, int digits = 3) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

std::string signed_fixed(double v) { return (v >= 0 ? "+" : "") + fixed(v); }

std::string metric_text(const json& j) { return j.is_number() ? fixed(j.get<double>()) : "n/a"; }

const std::vector<std::pair<std::string, std::string>>& summary_metrics() {
  static const std::vector<std::pair<std::string, std::string>> m{
      {"auroc", "AUROC"},         {"auprc", "AUPRC"},
      {"brier", "Brier"},         {"cal_slope", "cal. slope"},
      {"cal_intercept", "cal. intercept"}, {"thresholded/accuracy", "accuracy"},
      {"thresholded/precision", "precision"}, {"thresholded/recall", "recall"},
      {"thresholded/f1", "F1"}};
  return m;
}

const json& lookup(const json& model, const std::string& key) {
  return model.at(json::json_pointer("/" + key));
}

}  // namespace

// ---- config ---------------------------------------------------------------

json ExperimentConfig::to_json() const {
  json j;
  j["primary"] = {{"data", primary.data.string()}, {"schema", primary.schema.string()}};
  if (external) {
    j["external"] = {{"data", external->data.string()}, {"schema", external->schema.string()}};
  }
  if (mapping) {
    j["mapping"] = mapping->string();
  }
  j["split"] = {{"fraction", split_fraction}, {"seed", split_seed}, {"stratified", stratified}};
  j["smote"] = {{"scope", smote_scope},
                {"k_neighbors", smote.k_neighbors},
                {"target_ratio", smote.target_ratio},
                {"seed", smote.seed}};
  j["learners"]["logistic"] = {{"l2", logistic.l2}, {"tol", logistic.tol}, {"max_iter", logistic.max_iter}};
  j["learners"]["svm"] = {{"c", svm.c},
                          {"gamma", svm.gamma},
                          {"tol", svm.tol},
                          {"max_iterations", svm.max_iterations},
                          {"cache_megabytes", svm.cache_megabytes},
                          {"subsample", svm_subsample},
                          {"seed", svm_seed}};
  j["learners"]["random_forest"] = {{"trees", forest.trees},
                                    {"mtry", forest.mtry},
                                    {"max_depth", forest.max_depth},
                                    {"min_leaf", forest.min_leaf},
                                    {"bootstrap", forest.bootstrap},
                                    {"seed", forest.seed}};
  j["learners"]["gradient_boosting"] = {{"rounds", boosting.rounds},
                                        {"learning_rate", boosting.learning_rate},
                                        {"max_depth", boosting.max_depth},
                                        {"lambda", boosting.lambda},
                                        {"gamma", boosting.gamma},
                                        {"min_child_weight", boosting.min_child_weight},
                                        {"seed", boosting.seed}};
  j["ensemble"] = {{"xgb_rf_weights", xgb_rf_weights}, {"svm_lr_weights", svm_lr_weights}};
  j["tau"] = tau;
  j["bootstrap"] = {{"resamples", bootstrap}, {"seed", bootstrap_seed}};
  j["eval_mode"] = eval_mode;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const fs::path& base_dir) {
  ExperimentConfig c;
  try {
    reject_unknown(j, {"primary", "external", "mapping", "split", "smote", "learners", "ensemble", "tau",
                       "bootstrap", "eval_mode"},
                   "config");
    c.primary = read_cohort(j.at("primary"), base_dir, "primary");
    if (j.contains("external") && !j.at("external").is_null()) {
      c.external = read_cohort(j.at("external"), base_dir, "external");
    }
    if (j.contains("mapping") && !j.at("mapping").is_null()) {
      c.mapping = resolve(base_dir, j.at("mapping").get<std::string>());
    }
    if (j.contains("split")) {
      const auto& s = j.at("split");
      reject_unknown(s, {"fraction", "seed", "stratified"}, "split");
      read(s, "fraction", c.split_fraction);
      read(s, "seed", c.split_seed);
      read(s, "stratified", c.stratified);
    }
    if (j.contains("smote")) {
      const auto& s = j.at("smote");
      reject_unknown(s, {"scope", "k_neighbors", "target_ratio", "seed"}, "smote");
      read(s, "scope", c.smote_scope);
      read(s, "k_neighbors", c.smote.k_neighbors);
      read(s, "target_ratio", c.smote.target_ratio);
      read(s, "seed", c.smote.seed);
    }
    if (j.contains("learners")) {
      const auto& l = j.at("learners");
      reject_unknown(l, {"logistic", "svm", "random_forest", "gradient_boosting"}, "learners");
      if (l.contains("logistic")) {
        const auto& s = l.at("logistic");
        reject_unknown(s, {"l2", "tol", "max_iter"}, "learners.logistic");
        read(s, "l2", c.logistic.l2);
        read(s, "tol", c.logistic.tol);
        read(s, "max_iter", c.logistic.max_iter);
      }
      if (l.contains("svm")) {
        const auto& s = l.at("svm");
        reject_unknown(s, {"c", "gamma", "tol", "max_iterations", "cache_megabytes", "subsample", "seed"},
                       "learners.svm");
        read(s, "c", c.svm.c);
        read(s, "gamma", c.svm.gamma);
        read(s, "tol", c.svm.tol);
        read(s, "max_iterations", c.svm.max_iterations);
        read(s, "cache_megabytes", c.svm.cache_megabytes);
        read(s, "subsample", c.svm_subsample);
        read(s, "seed", c.svm_seed);
      }
      if (l.contains("random_forest")) {
        const auto& s = l.at("random_forest");
        reject_unknown(s, {"trees", "mtry", "max_depth", "min_leaf", "bootstrap", "seed"},
                       "learners.random_forest");
        read(s, "trees", c.forest.trees);
        read(s, "mtry", c.forest.mtry);
        read(s, "max_depth", c.forest.max_depth);
        read(s, "min_leaf", c.forest.min_leaf);
        read(s, "bootstrap", c.forest.bootstrap);
        read(s, "seed", c.forest.seed);
      }
      if (l.contains("gradient_boosting")) {
        const auto& s = l.at("gradient_boosting");
        reject_unknown(s, {"rounds", "learning_rate", "max_depth", "lambda", "gamma", "min_child_weight", "seed"},
                       "learners.gradient_boosting");
        read(s, "rounds", c.boosting.rounds);
        read(s, "learning_rate", c.boosting.learning_rate);
        read(s, "max_depth", c.boosting.max_depth);
        read(s, "lambda", c.boosting.lambda);
        read(s, "gamma", c.boosting.gamma);
        read(s, "min_child_weight", c.boosting.min_child_weight);
        read(s, "seed", c.boosting.seed);
      }
    }
    if (j.contains("ensemble")) {
      const auto& s = j.at("ensemble");
      reject_unknown(s, {"xgb_rf_weights", "svm_lr_weights"}, "ensemble");
      read(s, "xgb_rf_weights", c.xgb_rf_weights);
      read(s, "svm_lr_weights", c.svm_lr_weights);
    }
    read(j, "tau", c.tau);
    if (j.contains("bootstrap")) {
      const auto& s = j.at("bootstrap");
      reject_unknown(s, {"resamples", "seed"}, "bootstrap");
      read(s, "resamples", c.bootstrap);
      read(s, "seed", c.bootstrap_seed);
    }
    read(j, "eval_mode", c.eval_mode);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config, std::string("invalid config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  if (!fs::is_regular_file(path)) {
    throw Error(ErrorKind::config, "config not found: " + path.string());
  }
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config, path.string() + ": " + e.what());
  }
  return ExperimentConfig::from_json(j, fs::absolute(path).parent_path());
}

void apply_master_seed(ExperimentConfig& c, std::uint64_t seed) {
  c.split_seed = derive_seed(seed, 1);
  c.smote.seed = derive_seed(seed, 2);
  c.svm_seed = derive_seed(seed, 3);
  c.forest.seed = derive_seed(seed, 4);
  c.boosting.seed = derive_seed(seed, 5);
  c.bootstrap_seed = derive_seed(seed, 6);
}

void validate(const ExperimentConfig& c) {
  if (c.smote_scope != "train" && c.smote_scope != "none") {
    throw Error(ErrorKind::leakage_guard,
                "SMOTE scope '" + c.smote_scope + "' would resample rows outside the training fold");
  }
  if (!(c.split_fraction > 0.0 && c.split_fraction < 1.0)) {
    throw Error(ErrorKind::config, "split fraction must lie in (0, 1)");
  }
  if (!(c.tau > 0.0 && c.tau < 1.0)) {
    throw Error(ErrorKind::config, "tau must lie in (0, 1)");
  }
  if (c.eval_mode != "natural" && c.eval_mode != "balanced") {
    throw Error(ErrorKind::config, "eval_mode must be 'natural' or 'balanced'");
  }
  if (c.bootstrap < 1) {
    throw Error(ErrorKind::config, "bootstrap needs at least one resample");
  }
  if (c.svm_subsample < 2) {
    throw Error(ErrorKind::config, "SVM subsample must hold at least two rows");
  }
  require_file(c.primary.data, "primary data");
  require_file(c.primary.schema, "primary schema");
  if (c.external) {
    require_file(c.external->data, "external data");
    require_file(c.external->schema, "external schema");
  }
  if (c.mapping) {
    require_file(*c.mapping, "feature mapping");
  }
}

std::string file_fingerprint(const fs::path& path) { return hex64(fnv1a(read_file(path))); }

// ---- commands -------------------------------------------------------------

json cmd_prepare(const ExperimentConfig& config, const fs::path& out) {
  validate(config);
  const auto data = load_primary(config);
  const auto split = tabular::split_train_test(data, config.split_fraction, config.split_seed, config.stratified);
  json summary;
  summary["primary"] = {{"path", config.primary.data.string()},
                        {"fingerprint", file_fingerprint(config.primary.data)},
                        {"rows", data.size()},
                        {"distribution", distribution_json(tabular::class_distribution(data))}};
  summary["train"] = {{"rows", split.train.size()},
                      {"distribution", distribution_json(tabular::class_distribution(split.train))}};
  summary["test"] = {{"rows", split.test.size()},
                     {"distribution", distribution_json(tabular::class_distribution(split.test))}};
  if (config.external) {
    const auto schema = tabular::load_schema(config.external->schema);
    const auto ext = tabular::load_csv(config.external->data, schema, tabular::Cohort::external);
    summary["external"] = {{"path", config.external->data.string()},
                           {"fingerprint", file_fingerprint(config.external->data)},
                           {"rows", ext.size()},
                           {"distribution", distribution_json(tabular::class_distribution(ext))}};
  }
  write_json(out / "split.json", tabular::split_indices_json(split));
  write_json(out / "prepare.json", summary);
  return summary;
}

json cmd_train(const ExperimentConfig& config, const fs::path& out) {
  validate(config);
  const auto data = load_primary(config);
  const auto split = tabular::split_train_test(data, config.split_fraction, config.split_seed, config.stratified);

  preprocess::PreprocessConfig pre;
  if (config.mapping) {
    pre.mapping = preprocess::load_mapping(*config.mapping);
  }
  const auto base_pipeline = preprocess::fit_pipeline(split.train, pre);
  const auto train = preprocess::apply_pipeline(base_pipeline, split.train);

  smote::LabeledMatrix fold{train.features, train.labels, train.provenance};
  json smote_info = {{"scope", config.smote_scope}, {"rows_before", fold.y.size()}};
  if (config.smote_scope == "train") {
    auto res = smote::smote_oversample(fold, config.smote);
    smote_info["k_used"] = res.k_used;
    smote_info["minority_label"] = res.minority_label;
    smote_info["synthetic_rows"] = res.origins.size();
    fold = std::move(res.data);
  }
  smote_info["rows_after"] = fold.y.size();
  smote_info["distribution_after"] = distribution_json(tabular::class_distribution(fold.y));
  const Matrix& x = fold.x;
  const std::vector<int>& y = fold.y;

  const auto lr = learners::train_logistic(x, y, config.logistic);
  const auto rf = learners::train_random_forest(x, y, config.forest);
  const auto gbt = learners::train_gbt(x, y, config.boosting);

  const auto sub = stratified_subsample(y, config.svm_subsample, config.svm_seed);
  const auto svm = learners::train_svm(select_rows(x, sub), learners::to_signed_labels(select(y, sub)),
                                       config.svm);
  std::vector<std::size_t> platt_rows;
  {
    std::vector<char> in_sub(y.size(), 0);
    for (std::size_t r : sub) {
      in_sub[r] = 1;
    }
    for (std::size_t r = 0; r < y.size(); ++r) {
      if (!in_sub[r]) {
        platt_rows.push_back(r);
      }
    }
    if (platt_rows.empty()) {
      platt_rows = sub;
    }
  }
  const auto margins = learners::svm_decision_value(svm, select_rows(x, platt_rows));
  const auto calibrator = learners::fit_platt(margins, select(y, platt_rows));
  const auto pipeline = base_pipeline.with_calibration(calibrator);

  const auto svm_model = std::make_shared<const learners::CalibratedSvm>(svm, calibrator);
  const ensemble::VotingEnsemble boosted(
      kHybridBoosted, {{std::make_shared<const learners::GradientBoostingModel>(gbt), config.xgb_rf_weights[0]},
                       {std::make_shared<const learners::RandomForestModel>(rf), config.xgb_rf_weights[1]}});
  const ensemble::VotingEnsemble margin(
      kHybridMargin, {{svm_model, config.svm_lr_weights[0]},
                      {std::make_shared<const learners::LogisticModel>(lr), config.svm_lr_weights[1]}});

  fs::create_directories(out / "models");
  preprocess::save_pipeline(pipeline, out / "pipeline.json");
  write_model(out / "models/logistic.json", lr.to_json());
  write_model(out / "models/svm.json", svm.to_json());
  write_model(out / "models/random_forest.json", rf.to_json());
  write_model(out / "models/gradient_boosting.json", gbt.to_json());
  write_model(out / "models/xgb_rf.json", boosted.to_json());
  write_model(out / "models/svm_lr.json", margin.to_json());
  write_json(out / "split.json", tabular::split_indices_json(split));
  write_json(out / "config.json", config.to_json());

  json manifest;
  manifest["tool"] = "hybridrisk";
  manifest["tool_version"] = kToolVersion;
  manifest["pipeline_version"] = preprocess::kPipelineVersion;
  manifest["data"]["primary"] = {{"path", config.primary.data.string()},
                                 {"fingerprint", file_fingerprint(config.primary.data)},
                                 {"rows", data.size()},
                                 {"schema_fingerprint", data.schema().fingerprint()}};
  manifest["split"] = {{"seed", config.split_seed},
                       {"fraction", config.split_fraction},
                       {"train", distribution_json(tabular::class_distribution(split.train))},
                       {"test", distribution_json(tabular::class_distribution(split.test))}};
  manifest["smote"] = smote_info;
  manifest["svm"] = {{"subsample_rows", sub.size()},
                     {"subsample_seed", config.svm_seed},
                     {"platt_rows", platt_rows.size()},
                     {"platt_rows_disjoint", platt_rows.size() != sub.size() || sub.size() != y.size()},
                     {"support_vectors", svm.dual_coef.size()},
                     {"gamma", svm.gamma},
                     {"iterations", svm.iterations},
                     {"converged", svm.converged}};
  manifest["logistic"] = {{"iterations", lr.iterations}, {"gradient_norm", lr.gradient_norm}};
  manifest["gradient_boosting"] = {{"final_training_loss", gbt.training_loss.empty() ? 0.0 : gbt.training_loss.back()}};
  json files = json::object();
  for (const auto& f : parameter_files()) {
    files[f] = file_fingerprint(out / f);
  }
  manifest["files"] = files;
  write_json(out / "manifest.json", manifest);
  return manifest;
}

json cmd_evaluate(const fs::path& bundle, const EvalOptions& options) {
  const auto b = load_bundle(bundle);
  const double tau = options.tau.value_or(b.config.tau);
  const std::size_t resamples = options.bootstrap.value_or(b.config.bootstrap);
  const std::string mode = options.eval_mode.value_or(b.config.eval_mode);
  if (mode != "natural" && mode != "balanced") {
    throw Error(ErrorKind::config, "eval mode must be 'natural' or 'balanced'");
  }
  require_file(b.config.primary.data, "primary data");
  const auto recorded = b.manifest.at("data").at("primary").at("fingerprint").get<std::string>();
  if (file_fingerprint(b.config.primary.data) != recorded) {
    throw Error(ErrorKind::schema_drift, "primary data changed since training: " + b.config.primary.data.string());
  }
  const auto data = load_primary(b.config);
  const auto split = read_json(bundle / "split.json", ErrorKind::corrupt_file);
  std::vector<std::size_t> test_rows = split.at("test_indices").get<std::vector<std::size_t>>();
  auto test = data.subset(test_rows, tabular::Partition::test);
  if (mode == "balanced") {
    test = test.subset(balanced_positions(test.labels(), derive_seed(b.config.split_seed, 0xba1a)),
                       tabular::Partition::test);
  }
  const auto processed = preprocess::apply_pipeline(*b.pipeline, test);
  json report = evaluate_cohort(b, processed, "internal", tau, resamples, b.config.bootstrap_seed);
  report["eval_mode"] = mode;
  report["source"] = b.config.primary.data.filename().string();
  assert_unchanged(b);
  write_json(bundle / "reports" / "internal.json", report);
  return report;
}

json cmd_external_validate(const fs::path& bundle, const ExternalOptions& options) {
  const auto b = load_bundle(bundle);
  const double tau = options.eval.tau.value_or(b.config.tau);
  const std::size_t resamples = options.eval.bootstrap.value_or(b.config.bootstrap);
  const auto files = options.cohort ? options.cohort : b.config.external;
  if (!files) {
    throw Error(ErrorKind::config, "no external cohort configured");
  }
  require_file(files->data, "external data");
  require_file(files->schema, "external schema");
  const auto schema = tabular::load_schema(files->schema);
  const auto ext = tabular::load_csv(files->data, schema, tabular::Cohort::external);

  const FrozenPipeline* pipeline = b.pipeline.get();
  std::optional<FrozenPipeline> remapped;
  if (options.mapping) {
    require_file(*options.mapping, "feature mapping");
    remapped = b.pipeline->with_mapping(preprocess::load_mapping(*options.mapping));
    pipeline = &*remapped;
  }
  preprocess::ProcessedData processed;
  try {
    processed = preprocess::apply_pipeline(*pipeline, ext);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::unmappable_column) {
      throw Error(ErrorKind::schema_drift, e.what());
    }
    throw;
  }
  json report = evaluate_cohort(b, processed, "external", tau, resamples, b.config.bootstrap_seed);
  report["eval_mode"] = "natural";
  report["source"] = files->data.filename().string();
  report["data_fingerprint"] = file_fingerprint(files->data);
  report["mapping"] = pipeline->mapping().to_json();
  assert_unchanged(b);
  write_json(bundle / "reports" / "external.json", report);
  return report;
}

std::string cmd_report(const fs::path& bundle) {
  if (!fs::is_directory(bundle)) {
    throw Error(ErrorKind::config, "bundle directory not found: " + bundle.string());
  }
  std::vector<std::pair<std::string, json>> reports;
  for (const char* cohort : {"internal", "external"}) {
    const auto path = bundle / "reports" / (std::string(cohort) + ".json");
    if (fs::exists(path)) {
      reports.emplace_back(cohort, read_json(path, ErrorKind::missing_reports));
    }
  }
  if (reports.empty()) {
    throw Error(ErrorKind::missing_reports, "no evaluation reports under " + (bundle / "reports").string());
  }
  const std::map<std::string, std::string> colors{{kHybridBoosted, "#d62728"}, {kHybridMargin, "#1f77b4"}};
  const std::map<std::string, std::string> titles{{kHybridBoosted, "XGB-RF"}, {kHybridMargin, "SVM-LR"}};
  const fs::path curves = bundle / "reports" / "curves";
  const fs::path plots = bundle / "plots";

  std::ostringstream text;
  text << "# Evaluation summary\n";
  for (const auto& [cohort, r] : reports) {
    const double prevalence = r.at("prevalence").get<double>();
    plot::Chart roc{cohort + " cohort: ROC", "false positive rate", "true positive rate", {}, true, {}, {}};
    plot::Chart pr{cohort + " cohort: precision-recall", "recall", "precision", {}, false, prevalence,
                   "baseline " + fixed(prevalence)};
    plot::Chart rel{cohort + " cohort: reliability", "mean predicted", "observed frequency", {}, true, {}, {}};
    for (const char* model : {kHybridBoosted, kHybridMargin}) {
      const auto& m = r.at("models").at(model);
      roc.series.push_back({titles.at(model) + " (" + fixed(m.at("auroc").get<double>()) + ")",
                            read_curve_csv(curves / (cohort + "_" + model + "_roc.csv")), colors.at(model)});
      pr.series.push_back({titles.at(model) + " (" + fixed(m.at("auprc").get<double>()) + ")",
                           read_curve_csv(curves / (cohort + "_" + model + "_pr.csv")), colors.at(model)});
      plot::Series bins{titles.at(model), {}, colors.at(model), false, true};
      for (const auto& bin : m.at("reliability")) {
        if (bin.at("count").get<std::size_t>() > 0) {
          bins.points.push_back({bin.at("mean_predicted").get<double>(), bin.at("observed_frequency").get<double>()});
        }
      }
      rel.series.push_back(std::move(bins));
    }
    write_file_atomic(plots / (cohort + "_roc.svg"), plot::render_svg(roc));
    write_file_atomic(plots / (cohort + "_pr.svg"), plot::render_svg(pr));
    write_file_atomic(plots / (cohort + "_reliability.svg"), plot::render_svg(rel));

    text << "\n## " << cohort << " cohort (" << r.value("source", std::string{}) << ")\n\n";
    text << "n = " << r.at("n").get<std::size_t>() << ", prevalence = " << fixed(prevalence)
         << " (PR baseline), eval mode = " << r.value("eval_mode", std::string{"natural"}) << "\n\n";
    text << "| metric | XGB-RF | SVM-LR |\n|---|---|---|\n";
    for (const auto& [key, label] : summary_metrics()) {
      text << "| " << label << " | " << metric_text(lookup(r.at("models").at(kHybridBoosted), key)) << " | "
           << metric_text(lookup(r.at("models").at(kHybridMargin), key)) << " |\n";
    }
    for (const char* model : {kHybridBoosted, kHybridMargin}) {
      const auto& m = r.at("models").at(model);
      text << "\n" << titles.at(model) << " 95% CI: AUROC [" << fixed(m.at("auroc_ci")[0].get<double>()) << ", "
           << fixed(m.at("auroc_ci")[1].get<double>()) << "], AUPRC [" << fixed(m.at("auprc_ci")[0].get<double>())
           << ", " << fixed(m.at("auprc_ci")[1].get<double>()) << "]";
    }
    const auto& d = r.at("tests").at("delong");
    const auto& mc = r.at("tests").at("mcnemar");
    text << "\n\nDeLong: delta AUROC = " << signed_fixed(d.at("delta_auc").get<double>())
         << ", p = " << d.at("p").get<double>() << "\n";
    text << "McNemar: b = " << mc.at("b").get<std::size_t>() << ", c = " << mc.at("c").get<std::size_t>()
         << ", statistic = " << fixed(mc.at("statistic").get<double>()) << ", p = " << mc.at("p").get<double>()
         << "\n";
  }

  if (reports.size() < 2) {
    text << "\nAttenuation table omitted: only the " << reports.front().first
         << " cohort has been evaluated.\n";
  } else {
    const auto& in = reports[0].second.at("models");
    const auto& ex = reports[1].second.at("models");
    text << "\n## Attenuation (external - internal)\n\n| metric | XGB-RF | SVM-LR |\n|---|---|---|\n";
    for (const auto& [key, label] : summary_metrics()) {
      text << "| " << label;
      for (const char* model : {kHybridBoosted, kHybridMargin}) {
        const auto& a = lookup(in.at(model), key);
        const auto& e = lookup(ex.at(model), key);
        text << " | " << (a.is_number() && e.is_number() ? signed_fixed(e.get<double>() - a.get<double>()) : "n/a");
      }
      text << " |\n";
    }
    auto gap = [&](const json& models) {
      return models.at(kHybridBoosted).at("auprc").get<double>() - models.at(kHybridMargin).at("auprc").get<double>();
    };
    text << "\nAUPRC gap XGB-RF minus SVM-LR: internal " << signed_fixed(gap(in)) << ", external "
         << signed_fixed(gap(ex)) << "\n";
  }
  write_file_atomic(bundle / "summary.md", text.str());
  return text.str();
}

}  // namespace hybridrisk::runner
