#include "hybridrisk/tabular.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace hybridrisk::tabular {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::optional<double> parse_number(std::string_view text) {
  if (!text.empty() && text.front() == '+') {
    text.remove_prefix(1);
  }
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

std::string format_number(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

// Splits one CSV record starting at `pos`; handles quoted fields and CRLF.
std::vector<std::string> next_record(std::string_view text, std::size_t& pos) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  while (pos < text.size()) {
    const char c = text[pos++];
    if (quoted) {
      if (c == '"') {
        if (pos < text.size() && text[pos] == '"') {
          field.push_back('"');
          ++pos;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

bool blank_record(const std::vector<std::string>& fields) {
  return fields.size() == 1 && trim(fields.front()).empty();
}

std::string escape_field(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) {
    return field;
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') {
      out.push_back('"');
    }
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string_view to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::continuous: return "continuous";
    case ColumnKind::integer_count: return "integer";
    case ColumnKind::binary: return "binary";
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::outcome: return "outcome";
  }
  return "continuous";
}

ColumnKind column_kind_from_string(std::string_view text) {
  if (text == "continuous") return ColumnKind::continuous;
  if (text == "integer" || text == "integer-count") return ColumnKind::integer_count;
  if (text == "binary") return ColumnKind::binary;
  if (text == "categorical") return ColumnKind::categorical;
  if (text == "outcome") return ColumnKind::outcome;
  throw Error(ErrorKind::config, "unknown column kind '" + std::string(text) + "'");
}

Schema::Schema(std::vector<Column> columns, int positive_label)
    : columns_(std::move(columns)), positive_label_(positive_label) {
  std::set<std::string> names;
  std::size_t outcomes = 0;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    const auto& col = columns_[i];
    if (!names.insert(lower(col.name)).second) {
      throw Error(ErrorKind::config, "duplicate column name '" + col.name + "'");
    }
    if (col.kind == ColumnKind::outcome) {
      ++outcomes;
      outcome_ = i;
    }
    if (col.kind == ColumnKind::categorical) {
      if (col.levels.empty()) {
        throw Error(ErrorKind::config, "categorical column '" + col.name + "' has no levels");
      }
      std::set<std::string> tokens;
      std::set<int> codes;
      for (const auto& [token, code] : col.levels) {
        if (!tokens.insert(token).second || !codes.insert(code).second) {
          throw Error(ErrorKind::config,
                      "level map of '" + col.name + "' is not an injective code assignment");
        }
      }
    } else if (!col.levels.empty()) {
      throw Error(ErrorKind::config, "only categorical columns carry levels ('" + col.name + "')");
    }
  }
  if (outcomes != 1) {
    throw Error(ErrorKind::config, "schema must declare exactly one outcome column, found " +
                                       std::to_string(outcomes));
  }
}

std::optional<std::size_t> Schema::find(std::string_view name) const {
  const std::string key = lower(trim(name));
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (lower(columns_[i].name) == key) {
      return i;
    }
  }
  return std::nullopt;
}

std::size_t Schema::index_of(std::string_view name) const {
  if (auto idx = find(name)) {
    return *idx;
  }
  throw Error(ErrorKind::missing_column, std::string(name));
}

std::vector<std::size_t> Schema::feature_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (i != outcome_) {
      out.push_back(i);
    }
  }
  return out;
}

std::string Schema::fingerprint() const { return hex64(fnv1a(to_json().dump())); }

nlohmann::json Schema::to_json() const {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& col : columns_) {
    nlohmann::json c{{"name", col.name}, {"kind", std::string(to_string(col.kind))}};
    if (!col.unit.empty()) {
      c["unit"] = col.unit;
    }
    if (!col.levels.empty()) {
      nlohmann::json levels = nlohmann::json::array();
      for (const auto& [token, code] : col.levels) {
        levels.push_back({{"token", token}, {"code", code}});
      }
      c["levels"] = std::move(levels);
    }
    cols.push_back(std::move(c));
  }
  return {{"columns", std::move(cols)}, {"positive_label", positive_label_}};
}

Schema Schema::from_json(const nlohmann::json& j) {
  try {
    std::vector<Column> columns;
    for (const auto& c : j.at("columns")) {
      Column col;
      col.name = c.at("name").get<std::string>();
      col.kind = column_kind_from_string(c.at("kind").get<std::string>());
      col.unit = c.value("unit", std::string{});
      if (c.contains("levels")) {
        for (const auto& level : c.at("levels")) {
          col.levels.emplace_back(level.at("token").get<std::string>(), level.at("code").get<int>());
        }
      }
      columns.push_back(std::move(col));
    }
    return Schema(std::move(columns), j.value("positive_label", 1));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, std::string("malformed schema: ") + e.what());
  }
}

Schema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::config, "cannot open schema file " + path.string());
  }
  try {
    return Schema::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::config, "schema " + path.string() + ": " + e.what());
  }
}

std::string to_string(const Provenance& p) {
  std::string out = p.cohort == Cohort::primary ? "primary" : "external";
  switch (p.partition) {
    case Partition::full: return out + "/full";
    case Partition::train: return out + "/train";
    case Partition::test: return out + "/test";
  }
  return out;
}

Dataset::Dataset(Schema schema, std::vector<std::vector<Cell>> rows, Provenance provenance,
                 std::vector<std::size_t> source_rows)
    : schema_(std::move(schema)),
      rows_(std::move(rows)),
      source_rows_(std::move(source_rows)),
      provenance_(provenance) {
  if (rows_.empty()) {
    throw Error(ErrorKind::empty_file, "dataset has no rows");
  }
  if (source_rows_.empty()) {
    source_rows_.resize(rows_.size());
    std::iota(source_rows_.begin(), source_rows_.end(), std::size_t{0});
  } else if (source_rows_.size() != rows_.size()) {
    throw Error(ErrorKind::dimension_mismatch, "source row index count differs from row count");
  }
  const std::size_t outcome = schema_.outcome_index();
  labels_.reserve(rows_.size());
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    if (rows_[r].size() != schema_.size()) {
      throw Error(ErrorKind::dimension_mismatch,
                  "row " + std::to_string(r) + " has " + std::to_string(rows_[r].size()) +
                      " cells, schema has " + std::to_string(schema_.size()));
    }
    const auto* value = std::get_if<double>(&rows_[r][outcome]);
    if (value == nullptr || (*value != 0.0 && *value != 1.0)) {
      throw Error(ErrorKind::outcome_not_binary, "row " + std::to_string(source_rows_[r]));
    }
    labels_.push_back(static_cast<int>(*value) == schema_.positive_label() ? 1 : 0);
  }
}

Dataset Dataset::subset(const std::vector<std::size_t>& positions, Partition partition) const {
  std::vector<std::vector<Cell>> rows;
  std::vector<std::size_t> source;
  rows.reserve(positions.size());
  source.reserve(positions.size());
  for (std::size_t p : positions) {
    rows.push_back(rows_.at(p));
    source.push_back(source_rows_.at(p));
  }
  return Dataset(schema_, std::move(rows), Provenance{provenance_.cohort, partition},
                 std::move(source));
}

Dataset Dataset::with_provenance(Provenance provenance) const {
  Dataset copy = *this;
  copy.provenance_ = provenance;
  return copy;
}

Dataset parse_csv(std::string_view text, const Schema& schema, Cohort cohort) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") {
    text.remove_prefix(3);
  }
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto header = next_record(text, pos);
    if (blank_record(header)) {
      continue;
    }
    // column position in the file for each schema column
    std::vector<std::size_t> file_index(schema.size());
    std::vector<std::string> names;
    for (auto& h : header) {
      names.push_back(lower(trim(h)));
    }
    for (std::size_t c = 0; c < schema.size(); ++c) {
      const auto key = lower(schema.column(c).name);
      const auto it = std::find(names.begin(), names.end(), key);
      if (it == names.end()) {
        throw Error(ErrorKind::missing_column, schema.column(c).name);
      }
      file_index[c] = static_cast<std::size_t>(it - names.begin());
    }

    std::vector<std::vector<Cell>> rows;
    std::size_t record = 0;
    while (pos < text.size()) {
      auto fields = next_record(text, pos);
      if (blank_record(fields)) {
        continue;
      }
      std::vector<Cell> row(schema.size());
      for (std::size_t c = 0; c < schema.size(); ++c) {
        const std::string raw = file_index[c] < fields.size() ? trim(fields[file_index[c]]) : "";
        if (raw.empty() || raw == "NA") {
          continue;
        }
        if (schema.column(c).kind == ColumnKind::categorical) {
          row[c] = raw;
        } else if (auto value = parse_number(raw)) {
          row[c] = *value;
        }
      }
      const auto* outcome = std::get_if<double>(&row[schema.outcome_index()]);
      if (outcome == nullptr || (*outcome != 0.0 && *outcome != 1.0)) {
        throw Error(ErrorKind::outcome_not_binary, "row " + std::to_string(record));
      }
      rows.push_back(std::move(row));
      ++record;
    }
    if (rows.empty()) {
      throw Error(ErrorKind::empty_file, "no data rows after header");
    }
    return Dataset(schema, std::move(rows), Provenance{cohort, Partition::full});
  }
  throw Error(ErrorKind::empty_file, "no header row");
}

Dataset load_csv(const std::filesystem::path& path, const Schema& schema, Cohort cohort) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::io, "cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_csv(buffer.str(), schema, cohort);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + " (" + e.what() + ")");
  }
}

std::string format_csv(const Dataset& ds) {
  std::string out;
  const auto& schema = ds.schema();
  for (std::size_t c = 0; c < schema.size(); ++c) {
    out += (c ? "," : "") + escape_field(schema.column(c).name);
  }
  out += '\n';
  for (const auto& row : ds.rows()) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) {
        out += ',';
      }
      if (const auto* v = std::get_if<double>(&row[c])) {
        out += format_number(*v);
      } else if (const auto* s = std::get_if<std::string>(&row[c])) {
        out += escape_field(*s);
      }
    }
    out += '\n';
  }
  return out;
}

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorKind::io, "cannot write " + path.string());
  }
  out << format_csv(ds);
}

SplitPair split_train_test(const Dataset& ds, double fraction, std::uint64_t seed,
                           bool stratified) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(ErrorKind::config, "split fraction must lie in (0, 1)");
  }
  const std::size_t n = ds.size();
  Rng rng(seed);
  std::vector<char> in_train(n, 0);

  if (stratified) {
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < n; ++i) {
      by_class[ds.labels()[i]].push_back(i);
    }
    if (by_class[0].empty() || by_class[1].empty()) {
      throw Error(ErrorKind::class_absent,
                  by_class[0].empty() ? "no negative rows" : "no positive rows");
    }
    // Largest-remainder allocation keeps the total at round(fraction * n) and
    // each class within one row of its exact share.
    const auto total = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    std::size_t take[2];
    double remainder[2];
    for (int c = 0; c < 2; ++c) {
      const double exact = fraction * static_cast<double>(by_class[c].size());
      take[c] = static_cast<std::size_t>(std::floor(exact));
      remainder[c] = exact - static_cast<double>(take[c]);
    }
    std::size_t missing = total - std::min(total, take[0] + take[1]);
    for (int c : remainder[1] > remainder[0] ? std::array{1, 0} : std::array{0, 1}) {
      if (missing > 0 && take[c] < by_class[c].size()) {
        ++take[c];
        --missing;
      }
    }
    for (int c = 0; c < 2; ++c) {
      rng.shuffle(by_class[c]);
      for (std::size_t k = 0; k < take[c]; ++k) {
        in_train[by_class[c][k]] = 1;
      }
    }
  } else {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    const auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    for (std::size_t k = 0; k < take; ++k) {
      in_train[order[k]] = 1;
    }
  }

  std::vector<std::size_t> train_pos;
  std::vector<std::size_t> test_pos;
  for (std::size_t i = 0; i < n; ++i) {
    (in_train[i] ? train_pos : test_pos).push_back(i);
  }
  return SplitPair{ds.subset(train_pos, Partition::train), ds.subset(test_pos, Partition::test),
                   seed, fraction};
}

nlohmann::json split_indices_json(const SplitPair& split) {
  return {{"seed", split.seed},
          {"fraction", split.fraction},
          {"train_indices", split.train.source_rows()},
          {"test_indices", split.test.source_rows()}};
}

ClassDistribution class_distribution(std::span<const int> labels) {
  ClassDistribution out;
  for (int y : labels) {
    (y == 1 ? out.count_pos : out.count_neg) += 1;
  }
  out.prevalence = labels.empty() ? 0.0
                                  : static_cast<double>(out.count_pos) /
                                        static_cast<double>(labels.size());
  return out;
}

ClassDistribution class_distribution(const Dataset& ds) { return class_distribution(ds.labels()); }

}  // namespace hybridrisk::tabular
