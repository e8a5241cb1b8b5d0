#include "hybridrisk/preprocess.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "hybridrisk/io.hpp"

namespace hybridrisk::preprocess {

using tabular::Cell;
using tabular::ColumnKind;
using tabular::Dataset;
using tabular::Schema;

namespace {

std::string fold(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string out(s.substr(b, e - b));
  for (auto& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

bool contains_folded(const std::vector<std::string>& names, std::string_view name) {
  const auto key = fold(name);
  return std::any_of(names.begin(), names.end(),
                     [&](const std::string& n) { return fold(n) == key; });
}

bool is_fill_by_mode(ColumnKind kind) {
  return kind == ColumnKind::binary || kind == ColumnKind::categorical;
}

const EncoderMap::Entry* find_entry(const EncoderMap& e, std::string_view column) {
  for (const auto& entry : e.columns) {
    if (entry.column == column) {
      return &entry;
    }
  }
  return nullptr;
}

// Numeric value of a model-input cell after encoding; nullopt when missing.
std::optional<double> encoded(const EncoderMap& encoder, const tabular::Column& col,
                              const Cell& cell) {
  if (tabular::is_missing(cell)) {
    return std::nullopt;
  }
  if (col.kind == ColumnKind::categorical) {
    if (const auto* token = std::get_if<std::string>(&cell)) {
      return encoder.encode(col.name, *token);
    }
    const double code = std::get<double>(cell);
    const auto* entry = find_entry(encoder, col.name);
    const bool known = entry && std::any_of(entry->levels.begin(), entry->levels.end(),
                                            [&](const auto& l) { return l.second == code; });
    if (!known) {
      throw Error(ErrorKind::unseen_category, col.name + ": code " + std::to_string(code));
    }
    return code;
  }
  if (const auto* v = std::get_if<double>(&cell)) {
    return *v;
  }
  return std::nullopt;
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// Most frequent value; ties go to the smallest.
double mode(const std::vector<double>& values) {
  std::map<double, std::size_t> counts;
  for (double v : values) {
    counts[v] += 1;
  }
  double best = counts.begin()->first;
  std::size_t best_count = 0;
  for (const auto& [value, count] : counts) {
    if (count > best_count) {
      best = value;
      best_count = count;
    }
  }
  return best;
}

FeatureMapping normalized(FeatureMapping m) {
  std::sort(m.columns.begin(), m.columns.end());
  std::sort(m.zeros_as_missing.begin(), m.zeros_as_missing.end());
  if (m.fill_policy != "training_median") {
    throw Error(ErrorKind::config, "unsupported fill policy '" + m.fill_policy + "'");
  }
  for (std::size_t i = 0; i < m.columns.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (fold(m.columns[i].second) == fold(m.columns[j].second)) {
        throw Error(ErrorKind::config, "model column '" + m.columns[i].second + "' mapped twice");
      }
    }
  }
  return m;
}

Cell fill_cell(const FrozenPipeline& p, const tabular::Column& col) {
  const double value = p.imputer().fill_value(col.name);
  if (col.kind == ColumnKind::categorical) {
    return p.encoder().decode(col.name, static_cast<int>(value));
  }
  return value;
}

}  // namespace

int EncoderMap::encode(const std::string& column, const std::string& token) const {
  const auto* entry = find_entry(*this, column);
  if (entry == nullptr) {
    throw Error(ErrorKind::missing_column, column + " has no encoder");
  }
  const auto key = fold(token);
  for (const auto& [level, code] : entry->levels) {
    if (fold(level) == key) {
      return code;
    }
  }
  throw Error(ErrorKind::unseen_category, column + ": '" + token + "'");
}

const std::string& EncoderMap::decode(const std::string& column, int code) const {
  const auto* entry = find_entry(*this, column);
  if (entry != nullptr) {
    for (const auto& [level, c] : entry->levels) {
      if (c == code) {
        return level;
      }
    }
  }
  throw Error(ErrorKind::unseen_category, column + ": code " + std::to_string(code));
}

double ImputerParams::fill_value(const std::string& column) const {
  for (const auto& f : fills) {
    if (f.column == column) {
      return f.value;
    }
  }
  throw Error(ErrorKind::missing_column, column + " has no fill value");
}

nlohmann::json FeatureMapping::to_json() const {
  nlohmann::json cols = nlohmann::json::object();
  for (const auto& [ext, model] : columns) {
    cols[ext] = model;
  }
  return {{"columns", cols}, {"fill_policy", fill_policy}, {"zeros_as_missing", zeros_as_missing}};
}

FeatureMapping FeatureMapping::from_json(const nlohmann::json& j) {
  FeatureMapping m;
  try {
    for (const auto& [ext, model] : j.at("columns").items()) {
      m.columns.emplace_back(ext, model.get<std::string>());
    }
    m.fill_policy = j.value("fill_policy", std::string{"training_median"});
    m.zeros_as_missing = j.value("zeros_as_missing", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, std::string("malformed feature mapping: ") + e.what());
  }
  return normalized(std::move(m));
}

FeatureMapping load_mapping(const std::filesystem::path& path) {
  try {
    return FeatureMapping::from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error(e.kind() == ErrorKind::io ? ErrorKind::config : e.kind(),
                path.string() + ": " + e.what());
  }
}

FrozenPipeline::FrozenPipeline(Schema schema, EncoderMap encoder, ImputerParams imputer,
                               ScalerParams scaler, FeatureMapping mapping,
                               std::optional<learners::PlattCalibrator> calibration)
    : schema_(std::move(schema)),
      encoder_(std::move(encoder)),
      imputer_(std::move(imputer)),
      scaler_(std::move(scaler)),
      mapping_(normalized(std::move(mapping))),
      calibration_(calibration),
      fingerprint_(schema_.fingerprint()) {
  const auto names = feature_names();
  if (scaler_.ranges.size() != names.size() || imputer_.fills.size() != names.size()) {
    throw Error(ErrorKind::corrupt_file, "pipeline parameters do not cover the model inputs");
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (scaler_.ranges[i].column != names[i] || imputer_.fills[i].column != names[i]) {
      throw Error(ErrorKind::corrupt_file, "pipeline parameters out of schema order");
    }
    if (!(scaler_.ranges[i].min <= scaler_.ranges[i].max)) {
      throw Error(ErrorKind::corrupt_file, "scaler min exceeds max for " + names[i]);
    }
  }
  std::sort(imputer_.zeros_as_missing.begin(), imputer_.zeros_as_missing.end());
}

std::vector<std::string> FrozenPipeline::feature_names() const {
  std::vector<std::string> names;
  for (std::size_t c : schema_.feature_indices()) {
    names.push_back(schema_.column(c).name);
  }
  return names;
}

FrozenPipeline FrozenPipeline::with_calibration(const learners::PlattCalibrator& calibration) const {
  FrozenPipeline copy = *this;
  copy.calibration_ = calibration;
  return copy;
}

FrozenPipeline FrozenPipeline::with_mapping(FeatureMapping mapping) const {
  FrozenPipeline copy = *this;
  copy.mapping_ = normalized(std::move(mapping));
  copy.imputer_.zeros_as_missing = copy.mapping_.zeros_as_missing;
  return copy;
}

nlohmann::json FrozenPipeline::to_json() const {
  nlohmann::json enc = nlohmann::json::array();
  for (const auto& e : encoder_.columns) {
    nlohmann::json levels = nlohmann::json::array();
    for (const auto& [token, code] : e.levels) {
      levels.push_back({token, code});
    }
    enc.push_back({{"column", e.column}, {"levels", levels}});
  }
  nlohmann::json fills = nlohmann::json::array();
  for (const auto& f : imputer_.fills) {
    fills.push_back({{"column", f.column}, {"statistic", f.statistic}, {"value", f.value}});
  }
  nlohmann::json ranges = nlohmann::json::array();
  for (const auto& r : scaler_.ranges) {
    ranges.push_back({{"column", r.column}, {"min", r.min}, {"max", r.max}});
  }
  return {{"version", version_},
          {"fingerprint", fingerprint_},
          {"encoder", {{"schema", schema_.to_json()}, {"columns", enc}}},
          {"imputer", {{"fills", fills}, {"zeros_as_missing", imputer_.zeros_as_missing}}},
          {"scaler", {{"ranges", ranges}}},
          {"mapping", mapping_.to_json()},
          {"calibration", calibration_ ? calibration_->to_json() : nlohmann::json(nullptr)}};
}

FrozenPipeline FrozenPipeline::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("version")) {
    throw Error(ErrorKind::corrupt_file, "pipeline document has no version");
  }
  if (!j.at("version").is_string() || j.at("version").get<std::string>() != kPipelineVersion) {
    throw Error(ErrorKind::version_mismatch,
                "expected " + std::string(kPipelineVersion) + ", found " + j.at("version").dump());
  }
  try {
    auto schema = Schema::from_json(j.at("encoder").at("schema"));
    EncoderMap enc;
    for (const auto& e : j.at("encoder").at("columns")) {
      EncoderMap::Entry entry{e.at("column").get<std::string>(), {}};
      for (const auto& l : e.at("levels")) {
        entry.levels.emplace_back(l.at(0).get<std::string>(), l.at(1).get<int>());
      }
      enc.columns.push_back(std::move(entry));
    }
    ImputerParams imp;
    for (const auto& f : j.at("imputer").at("fills")) {
      imp.fills.push_back({f.at("column").get<std::string>(), f.at("statistic").get<std::string>(),
                           f.at("value").get<double>()});
    }
    imp.zeros_as_missing = j.at("imputer").at("zeros_as_missing").get<std::vector<std::string>>();
    ScalerParams sc;
    for (const auto& r : j.at("scaler").at("ranges")) {
      sc.ranges.push_back(
          {r.at("column").get<std::string>(), r.at("min").get<double>(), r.at("max").get<double>()});
    }
    auto mapping = FeatureMapping::from_json(j.at("mapping"));
    std::optional<learners::PlattCalibrator> cal;
    if (!j.at("calibration").is_null()) {
      cal = learners::PlattCalibrator::from_json(j.at("calibration"));
    }
    FrozenPipeline p(std::move(schema), std::move(enc), std::move(imp), std::move(sc),
                     std::move(mapping), cal);
    if (p.fingerprint() != j.at("fingerprint").get<std::string>()) {
      throw Error(ErrorKind::corrupt_file, "schema fingerprint does not match");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::corrupt_file, std::string("malformed pipeline: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::version_mismatch || e.kind() == ErrorKind::corrupt_file) {
      throw;
    }
    throw Error(ErrorKind::corrupt_file, std::string("invalid pipeline: ") + e.what());
  }
}

FrozenPipeline fit_pipeline(const Dataset& train, const PreprocessConfig& config) {
  if (train.provenance() != tabular::Provenance{tabular::Cohort::primary, tabular::Partition::train}) {
    throw Error(ErrorKind::leakage_guard,
                "pipeline fit on " + to_string(train.provenance()) + " data; only primary/train is allowed");
  }
  if (train.size() == 0) {
    throw Error(ErrorKind::empty_train, "training split is empty");
  }
  const auto dist = tabular::class_distribution(train);
  if (dist.count_pos == 0 || dist.count_neg == 0) {
    throw Error(ErrorKind::constant_outcome, "training outcome takes a single value");
  }
  const Schema& schema = train.schema();
  const auto mapping = normalized(config.mapping);
  for (const auto& [ext, model] : mapping.columns) {
    const auto idx = schema.index_of(model);
    if (idx == schema.outcome_index()) {
      throw Error(ErrorKind::config, "mapping targets the outcome column '" + model + "'");
    }
  }

  EncoderMap encoder;
  for (const auto& col : schema.columns()) {
    if (col.kind == ColumnKind::categorical) {
      encoder.columns.push_back({col.name, col.levels});
    }
  }
  ImputerParams imputer;
  imputer.zeros_as_missing = mapping.zeros_as_missing;
  ScalerParams scaler;
  for (std::size_t c : schema.feature_indices()) {
    const auto& col = schema.column(c);
    std::vector<double> observed;
    observed.reserve(train.size());
    for (const auto& row : train.rows()) {
      if (auto v = encoded(encoder, col, row[c])) {
        observed.push_back(*v);
      }
    }
    if (observed.empty()) {
      throw Error(ErrorKind::empty_train, "column '" + col.name + "' has no observed training values");
    }
    const bool by_mode = is_fill_by_mode(col.kind);
    const double fill = by_mode ? mode(observed) : median(observed);
    imputer.fills.push_back({col.name, by_mode ? "mode" : "median", fill});
    // Missing training cells take the fill value, so it bounds the range too.
    double lo = fill, hi = fill;
    for (double v : observed) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    scaler.ranges.push_back({col.name, lo, hi});
  }
  return FrozenPipeline(schema, std::move(encoder), std::move(imputer), std::move(scaler), mapping);
}

Harmonized harmonize(const Dataset& ds, const FeatureMapping& mapping, const FrozenPipeline& p) {
  const Schema& model = p.schema();
  const Schema& ext = ds.schema();
  if (ext == model) {
    return {ds, {}, {}};
  }
  // model column index -> external column index
  std::vector<std::optional<std::size_t>> source(model.size());
  source[model.outcome_index()] = ext.outcome_index();

  std::vector<std::pair<std::string, std::string>> pairs = mapping.columns;
  if (pairs.empty()) {
    // Without an explicit mapping, columns pair by name.
    for (std::size_t c : model.feature_indices()) {
      if (auto e = ext.find(model.column(c).name); e && *e != ext.outcome_index()) {
        pairs.emplace_back(ext.column(*e).name, model.column(c).name);
      }
    }
    if (pairs.empty()) {
      throw Error(ErrorKind::unmappable_column, "no external column matches a model input");
    }
  }
  std::vector<char> used(ext.size(), 0);
  used[ext.outcome_index()] = 1;
  for (const auto& [ext_name, model_name] : pairs) {
    const auto e = ext.find(ext_name);
    if (!e || *e == ext.outcome_index()) {
      throw Error(ErrorKind::unmappable_column, "external column '" + ext_name + "' not in data");
    }
    const auto m = model.find(model_name);
    if (!m || *m == model.outcome_index()) {
      throw Error(ErrorKind::unmappable_column, "model column '" + model_name + "' not a model input");
    }
    const auto& eu = ext.column(*e).unit;
    const auto& mu = model.column(*m).unit;
    if (!eu.empty() && !mu.empty() && fold(eu) != fold(mu)) {
      throw Error(ErrorKind::unit_mismatch,
                  ext_name + " [" + eu + "] -> " + model_name + " [" + mu + "]");
    }
    source[*m] = *e;
    used[*e] = 1;
  }

  Harmonized out{ds, {}, {}};
  for (std::size_t c = 0; c < ext.size(); ++c) {
    if (!used[c]) {
      out.dropped_columns.push_back(ext.column(c).name);
    }
  }
  std::vector<Cell> fills(model.size());
  std::vector<char> zero_missing(ext.size(), 0);
  for (std::size_t c = 0; c < ext.size(); ++c) {
    zero_missing[c] = contains_folded(mapping.zeros_as_missing, ext.column(c).name);
  }
  for (std::size_t c : model.feature_indices()) {
    if (!source[c]) {
      out.filled_columns.push_back(model.column(c).name);
      fills[c] = fill_cell(p, model.column(c));
    }
  }

  std::vector<std::vector<Cell>> rows;
  rows.reserve(ds.size());
  for (const auto& in : ds.rows()) {
    std::vector<Cell> row(model.size());
    for (std::size_t c = 0; c < model.size(); ++c) {
      if (!source[c]) {
        row[c] = fills[c];
        continue;
      }
      const Cell& cell = in[*source[c]];
      const auto* v = std::get_if<double>(&cell);
      row[c] = (v && *v == 0.0 && zero_missing[*source[c]]) ? Cell{} : cell;
    }
    rows.push_back(std::move(row));
  }
  out.data = Dataset(model, std::move(rows), ds.provenance(), ds.source_rows());
  return out;
}

Dataset impute(const FrozenPipeline& p, const Dataset& data) {
  if (!(data.schema() == p.schema())) {
    throw Error(ErrorKind::dimension_mismatch, "imputation expects the model input schema");
  }
  const Schema& schema = p.schema();
  std::vector<std::vector<Cell>> rows = data.rows();
  for (std::size_t c : schema.feature_indices()) {
    const Cell fill = fill_cell(p, schema.column(c));
    for (auto& row : rows) {
      if (tabular::is_missing(row[c])) {
        row[c] = fill;
      }
    }
  }
  return Dataset(schema, std::move(rows), data.provenance(), data.source_rows());
}

ProcessedData apply_pipeline(const FrozenPipeline& p, const Dataset& ds) {
  auto harmonized = harmonize(ds, p.mapping(), p);
  const Dataset filled = impute(p, harmonized.data);
  const Schema& schema = p.schema();
  const auto features = schema.feature_indices();

  ProcessedData out;
  out.features = Matrix(filled.size(), features.size());
  out.labels = filled.labels();
  out.provenance = filled.provenance();
  out.source_rows = filled.source_rows();
  out.filled_columns = std::move(harmonized.filled_columns);
  out.dropped_columns = std::move(harmonized.dropped_columns);

  std::size_t outside = 0;
  for (std::size_t r = 0; r < filled.size(); ++r) {
    const auto& row = filled.row(r);
    for (std::size_t k = 0; k < features.size(); ++k) {
      const auto& col = schema.column(features[k]);
      const auto value = encoded(p.encoder(), col, row[features[k]]);
      if (!value) {
        throw Error(ErrorKind::unseen_category, col.name + ": non-numeric cell");
      }
      const auto& range = p.scaler().ranges[k];
      const double span = range.max - range.min;
      const double scaled = span > 0.0 ? (*value - range.min) / span : 0.0;
      out.features(r, k) = scaled;
      outside += (scaled < 0.0 || scaled > 1.0) ? 1 : 0;
    }
  }
  const auto cells = static_cast<double>(filled.size() * features.size());
  out.out_of_range_fraction = cells > 0 ? static_cast<double>(outside) / cells : 0.0;
  return out;
}

std::string dump_pipeline(const FrozenPipeline& p) { return p.to_json().dump(2) + "\n"; }

void save_pipeline(const FrozenPipeline& p, const std::filesystem::path& path) {
  write_file_atomic(path, dump_pipeline(p));
}

FrozenPipeline load_pipeline(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::corrupt_file, path.string() + ": " + e.what());
  }
  return FrozenPipeline::from_json(j);
}

}  // namespace hybridrisk::preprocess
