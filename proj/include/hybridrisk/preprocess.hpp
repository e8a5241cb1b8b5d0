#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hybridrisk/learners/platt.hpp"
#include "hybridrisk/tabular.hpp"

namespace hybridrisk::preprocess {

inline constexpr const char* kPipelineVersion = "hybridrisk-pipeline/1";

/// Token -> code per categorical model column, taken verbatim from the schema.
struct EncoderMap {
  struct Entry {
    std::string column;
    std::vector<std::pair<std::string, int>> levels;
    bool operator==(const Entry&) const = default;
  };
  std::vector<Entry> columns;

  /// Case-insensitive token lookup. Throws UnseenCategory.
  int encode(const std::string& column, const std::string& token) const;
  const std::string& decode(const std::string& column, int code) const;

  bool operator==(const EncoderMap&) const = default;
};

struct ImputerParams {
  struct Fill {
    std::string column;
    /// "median" (continuous, integer) or "mode" (binary, categorical code).
    std::string statistic;
    double value = 0.0;
    bool operator==(const Fill&) const = default;
  };
  std::vector<Fill> fills;
  /// External column names whose zeros are treated as missing.
  std::vector<std::string> zeros_as_missing;

  double fill_value(const std::string& column) const;

  bool operator==(const ImputerParams&) const = default;
};

struct ScalerParams {
  struct Range {
    std::string column;
    double min = 0.0;
    double max = 0.0;
    bool operator==(const Range&) const = default;
  };
  std::vector<Range> ranges;

  bool operator==(const ScalerParams&) const = default;
};

/// External column -> model column. Model inputs left unmapped are filled
/// with the training median (or mode). Outcome columns pair automatically.
struct FeatureMapping {
  std::vector<std::pair<std::string, std::string>> columns;
  std::string fill_policy = "training_median";
  std::vector<std::string> zeros_as_missing;

  bool empty() const noexcept { return columns.empty(); }

  nlohmann::json to_json() const;
  static FeatureMapping from_json(const nlohmann::json& j);

  bool operator==(const FeatureMapping&) const = default;
};

FeatureMapping load_mapping(const std::filesystem::path& path);

struct PreprocessConfig {
  FeatureMapping mapping;
};

/// Everything fitted on the primary training split. Immutable; the only way
/// to attach calibration is with_calibration, which returns a new pipeline.
class FrozenPipeline {
 public:
  FrozenPipeline(tabular::Schema schema, EncoderMap encoder, ImputerParams imputer,
                 ScalerParams scaler, FeatureMapping mapping,
                 std::optional<learners::PlattCalibrator> calibration = std::nullopt);

  const tabular::Schema& schema() const noexcept { return schema_; }
  const EncoderMap& encoder() const noexcept { return encoder_; }
  const ImputerParams& imputer() const noexcept { return imputer_; }
  const ScalerParams& scaler() const noexcept { return scaler_; }
  const FeatureMapping& mapping() const noexcept { return mapping_; }
  const std::optional<learners::PlattCalibrator>& calibration() const noexcept {
    return calibration_;
  }
  const std::string& version() const noexcept { return version_; }
  const std::string& fingerprint() const noexcept { return fingerprint_; }

  /// Model input columns (schema features, declaration order).
  std::vector<std::string> feature_names() const;
  std::size_t n_features() const noexcept { return scaler_.ranges.size(); }

  FrozenPipeline with_calibration(const learners::PlattCalibrator& calibration) const;
  FrozenPipeline with_mapping(FeatureMapping mapping) const;

  nlohmann::json to_json() const;
  static FrozenPipeline from_json(const nlohmann::json& j);

  bool operator==(const FrozenPipeline&) const = default;

 private:
  tabular::Schema schema_;
  EncoderMap encoder_;
  ImputerParams imputer_;
  ScalerParams scaler_;
  FeatureMapping mapping_;
  std::optional<learners::PlattCalibrator> calibration_;
  std::string version_ = kPipelineVersion;
  std::string fingerprint_;
};

/// Fits encoder, imputer and scaler on `train`, which must carry primary/train
/// provenance (LeakageGuard otherwise).
FrozenPipeline fit_pipeline(const tabular::Dataset& train, const PreprocessConfig& config = {});

struct Harmonized {
  tabular::Dataset data;
  std::vector<std::string> filled_columns;
  std::vector<std::string> dropped_columns;
};

/// Renames mapped external columns into the model schema, fills unmapped model
/// inputs from the imputer, and drops surplus columns. Zeros in the mapping's
/// zeros_as_missing columns become missing. A dataset already in the model
/// schema passes through unchanged.
Harmonized harmonize(const tabular::Dataset& ds, const FeatureMapping& mapping,
                     const FrozenPipeline& p);

/// Replaces missing model-input cells with the frozen fill values.
tabular::Dataset impute(const FrozenPipeline& p, const tabular::Dataset& model_schema_data);

struct ProcessedData {
  Matrix features;
  std::vector<int> labels;
  tabular::Provenance provenance;
  std::vector<std::size_t> source_rows;
  /// Share of scaled cells outside [0, 1]; those cells are not clipped.
  double out_of_range_fraction = 0.0;
  std::vector<std::string> filled_columns;
  std::vector<std::string> dropped_columns;
};

/// encode -> harmonize -> impute -> scale, using the pipeline's own mapping
/// for data outside the model schema.
ProcessedData apply_pipeline(const FrozenPipeline& p, const tabular::Dataset& ds);

/// Deterministic JSON text (sorted keys, round-trip doubles).
std::string dump_pipeline(const FrozenPipeline& p);
void save_pipeline(const FrozenPipeline& p, const std::filesystem::path& path);
FrozenPipeline load_pipeline(const std::filesystem::path& path);

}  // namespace hybridrisk::preprocess
