#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "hybridrisk/learners/boosting.hpp"
#include "hybridrisk/learners/forest.hpp"
#include "hybridrisk/learners/logistic.hpp"
#include "hybridrisk/learners/svm.hpp"
#include "hybridrisk/smote.hpp"
#include "json.hpp"

namespace hybridrisk::runner {

namespace fs = std::filesystem;

inline constexpr const char* kToolVersion = "1.0.0";

struct CohortFiles {
  fs::path data;
  fs::path schema;
};

/// Every knob of an experiment. Relative paths in the JSON file resolve
/// against the file's directory.
struct ExperimentConfig {
  CohortFiles primary;
  std::optional<CohortFiles> external;
  std::optional<fs::path> mapping;

  double split_fraction = 0.7;
  std::uint64_t split_seed = 42;
  bool stratified = true;

  /// "train" (resample the training fold) or "none". Anything else is a
  /// leakage-guard violation.
  std::string smote_scope = "train";
  smote::SmoteConfig smote{5, 1.0, 7};

  learners::LogisticOptions logistic;
  learners::SvmOptions svm;
  std::size_t svm_subsample = 20000;
  std::uint64_t svm_seed = 11;
  learners::ForestOptions forest;
  learners::BoostingOptions boosting;

  /// Member weights: (gradient boosting, random forest) and (SVM, logistic).
  std::array<double, 2> xgb_rf_weights{0.5, 0.5};
  std::array<double, 2> svm_lr_weights{0.5, 0.5};

  double tau = 0.5;
  std::size_t bootstrap = 1000;
  std::uint64_t bootstrap_seed = 2024;
  /// "natural" or "balanced" (seeded majority undersampling of the test split).
  std::string eval_mode = "natural";

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j, const fs::path& base_dir);
};

ExperimentConfig load_config(const fs::path& path);

/// Replaces every component seed with one derived from `seed`.
void apply_master_seed(ExperimentConfig& config, std::uint64_t seed);

/// Throws Config / LeakageGuard for invalid settings.
void validate(const ExperimentConfig& config);

/// Loads and splits the primary cohort; writes split.json and prepare.json.
nlohmann::json cmd_prepare(const ExperimentConfig& config, const fs::path& out);

/// split -> fit pipeline on train -> apply -> SMOTE (train only) -> four
/// learners -> Platt on SVM margins -> two hybrids -> bundle under `out`.
nlohmann::json cmd_train(const ExperimentConfig& config, const fs::path& out);

struct EvalOptions {
  std::optional<double> tau;
  std::optional<std::size_t> bootstrap;
  std::optional<std::string> eval_mode;
};

/// Scores the held-out primary split; writes reports/internal.json.
nlohmann::json cmd_evaluate(const fs::path& bundle, const EvalOptions& options = {});

struct ExternalOptions {
  EvalOptions eval;
  std::optional<CohortFiles> cohort;
  std::optional<fs::path> mapping;
};

/// Scores an external cohort through the frozen pipeline; writes
/// reports/external.json. Unmappable columns raise SchemaDrift.
nlohmann::json cmd_external_validate(const fs::path& bundle, const ExternalOptions& options = {});

/// Plots and summary from the reports present in the bundle; returns the
/// summary text. MissingReports when no report exists.
std::string cmd_report(const fs::path& bundle);

/// FNV-1a of the file contents, hex.
std::string file_fingerprint(const fs::path& path);

}  // namespace hybridrisk::runner
