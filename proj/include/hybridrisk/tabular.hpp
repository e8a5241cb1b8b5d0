#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "hybridrisk/common.hpp"
#include "json.hpp"

namespace hybridrisk::tabular {

enum class ColumnKind { continuous, integer_count, binary, categorical, outcome };

std::string_view to_string(ColumnKind kind);
ColumnKind column_kind_from_string(std::string_view text);

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;
  /// Declared measurement unit; empty when not declared. Never converted.
  std::string unit;
  /// Token -> code, only for categorical columns.
  std::vector<std::pair<std::string, int>> levels;

  bool operator==(const Column&) const = default;
};

/// Ordered column declarations with exactly one outcome column.
class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<Column> columns, int positive_label = 1);

  const std::vector<Column>& columns() const noexcept { return columns_; }
  const Column& column(std::size_t i) const { return columns_.at(i); }
  std::size_t size() const noexcept { return columns_.size(); }
  int positive_label() const noexcept { return positive_label_; }

  std::optional<std::size_t> find(std::string_view name) const;
  /// Throws MissingColumn.
  std::size_t index_of(std::string_view name) const;
  std::size_t outcome_index() const noexcept { return outcome_; }
  /// Every non-outcome column, in declaration order.
  std::vector<std::size_t> feature_indices() const;

  std::string fingerprint() const;

  nlohmann::json to_json() const;
  static Schema from_json(const nlohmann::json& j);

  bool operator==(const Schema&) const = default;

 private:
  std::vector<Column> columns_;
  int positive_label_ = 1;
  std::size_t outcome_ = 0;
};

Schema load_schema(const std::filesystem::path& path);

/// Raw cell: missing, numeric, or categorical token.
using Cell = std::variant<std::monostate, double, std::string>;

inline bool is_missing(const Cell& c) { return std::holds_alternative<std::monostate>(c); }

enum class Cohort { primary, external };
enum class Partition { full, train, test };

struct Provenance {
  Cohort cohort = Cohort::primary;
  Partition partition = Partition::full;

  bool operator==(const Provenance&) const = default;
};

std::string to_string(const Provenance& p);

/// Immutable labeled cohort. Outcome cells are kept in the rows and mirrored
/// in labels() as 0/1 (1 = schema positive label).
class Dataset {
 public:
  Dataset(Schema schema, std::vector<std::vector<Cell>> rows, Provenance provenance,
          std::vector<std::size_t> source_rows = {});

  const Schema& schema() const noexcept { return schema_; }
  std::size_t size() const noexcept { return rows_.size(); }
  const std::vector<Cell>& row(std::size_t i) const { return rows_.at(i); }
  const std::vector<std::vector<Cell>>& rows() const noexcept { return rows_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const Provenance& provenance() const noexcept { return provenance_; }
  /// Row index in the originating file for each row.
  const std::vector<std::size_t>& source_rows() const noexcept { return source_rows_; }

  /// Rows at the given positions (positions index this dataset, not the file).
  Dataset subset(const std::vector<std::size_t>& positions, Partition partition) const;
  Dataset with_provenance(Provenance provenance) const;

  bool operator==(const Dataset&) const = default;

 private:
  Schema schema_;
  std::vector<std::vector<Cell>> rows_;
  std::vector<int> labels_;
  std::vector<std::size_t> source_rows_;
  Provenance provenance_;
};

/// Comma-delimited, header first. Empty and "NA" cells are missing;
/// unparseable numeric cells are recorded as missing.
Dataset load_csv(const std::filesystem::path& path, const Schema& schema,
                 Cohort cohort = Cohort::primary);
Dataset parse_csv(std::string_view text, const Schema& schema, Cohort cohort = Cohort::primary);
void save_csv(const Dataset& ds, const std::filesystem::path& path);
std::string format_csv(const Dataset& ds);

struct SplitPair {
  Dataset train;
  Dataset test;
  std::uint64_t seed = 0;
  double fraction = 0.0;
};

SplitPair split_train_test(const Dataset& ds, double fraction, std::uint64_t seed,
                           bool stratified = true);

/// {seed, fraction, train_indices, test_indices}; indices are file rows.
nlohmann::json split_indices_json(const SplitPair& split);

struct ClassDistribution {
  std::size_t count_neg = 0;
  std::size_t count_pos = 0;
  double prevalence = 0.0;
};

ClassDistribution class_distribution(const Dataset& ds);
ClassDistribution class_distribution(std::span<const int> labels);

}  // namespace hybridrisk::tabular
