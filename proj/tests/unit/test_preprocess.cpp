#include <string>

#include "doctest.h"
#include "hybridrisk/preprocess.hpp"

using namespace hybridrisk;
using namespace hybridrisk::tabular;
using namespace hybridrisk::preprocess;

namespace {

Schema model_schema() {
  return Schema::from_json(nlohmann::json::parse(R"({
    "columns": [
      {"name": "age", "kind": "continuous", "unit": "years"},
      {"name": "smoking", "kind": "categorical",
       "levels": [{"token": "never", "code": 0}, {"token": "current", "code": 1}, {"token": "former", "code": 2}]},
      {"name": "hypertension", "kind": "binary"},
      {"name": "glucose", "kind": "continuous", "unit": "mg/dL"},
      {"name": "diabetes", "kind": "outcome"}
    ]})"));
}

Schema external_schema(const std::string& glucose_unit = "mg/dL") {
  return Schema::from_json(nlohmann::json::parse(R"({
    "columns": [
      {"name": "Glucose", "kind": "continuous", "unit": ")" + glucose_unit + R"("},
      {"name": "Age", "kind": "continuous", "unit": "years"},
      {"name": "Insulin", "kind": "continuous"},
      {"name": "Outcome", "kind": "outcome"}
    ]})"));
}

const char* kTrainCsv =
    "age,smoking,hypertension,glucose,diabetes\n"
    "20,never,0,90,0\n"
    "40,Current,1,,1\n"
    "60,former,0,150,1\n"
    "30,never,,110,0\n"
    ",current,0,130,0\n";

Dataset train_split() {
  return parse_csv(kTrainCsv, model_schema()).with_provenance({Cohort::primary, Partition::train});
}

FeatureMapping pima_mapping() {
  return FeatureMapping::from_json(nlohmann::json::parse(
      R"({"columns": {"Glucose": "glucose", "Age": "age"}, "fill_policy": "training_median",
          "zeros_as_missing": ["Glucose"]})"));
}

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::config;
}

}  // namespace

TEST_SUITE("preprocess") {

TEST_CASE("fitted statistics") {
  const auto p = fit_pipeline(train_split());
  // age median of {20, 40, 60, 30} = 35; glucose median of {90, 150, 110, 130} = 120
  CHECK(p.imputer().fill_value("age") == 35.0);
  CHECK(p.imputer().fill_value("glucose") == 120.0);
  // smoking codes {0, 1, 2, 0, 1}: tie between 0 and 1 resolves to 0
  CHECK(p.imputer().fill_value("smoking") == 0.0);
  CHECK(p.imputer().fill_value("hypertension") == 0.0);
  REQUIRE(p.scaler().ranges.size() == 4);
  CHECK(p.scaler().ranges[0].min == 20.0);
  CHECK(p.scaler().ranges[0].max == 60.0);
  CHECK(p.feature_names() == std::vector<std::string>{"age", "smoking", "hypertension", "glucose"});
}

TEST_CASE("applying to training data maps into the unit interval") {
  const auto train = train_split();
  const auto p = fit_pipeline(train);
  const auto out = apply_pipeline(p, train);
  CHECK(out.features.rows() == 5);
  CHECK(out.out_of_range_fraction == 0.0);
  for (double v : out.features.values()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(out.features(0, 0) == 0.0);
  CHECK(out.features(2, 0) == 1.0);
  CHECK(out.features(4, 0) == doctest::Approx(15.0 / 40.0));  // imputed 35
  CHECK(out.features(1, 1) == 0.5);                          // "Current" -> 1 of 0..2
  CHECK(out.labels == std::vector<int>{0, 1, 1, 0, 0});
}

TEST_CASE("values outside the training range are not clipped") {
  const auto p = fit_pipeline(train_split());
  const auto test = parse_csv("age,smoking,hypertension,glucose,diabetes\n100,never,0,90,1\n",
                              model_schema())
                        .with_provenance({Cohort::primary, Partition::test});
  const auto out = apply_pipeline(p, test);
  CHECK(out.features(0, 0) == doctest::Approx(2.0));
  CHECK(out.out_of_range_fraction == doctest::Approx(0.25));
}

TEST_CASE("constant training column scales to zero") {
  const auto ds = parse_csv("age,smoking,hypertension,glucose,diabetes\n5,never,0,1,0\n5,never,0,2,1\n",
                            model_schema())
                      .with_provenance({Cohort::primary, Partition::train});
  const auto out = apply_pipeline(fit_pipeline(ds), ds);
  CHECK(out.features(0, 0) == 0.0);
  CHECK(out.features(1, 0) == 0.0);
}

TEST_CASE("leakage guard and degenerate training data") {
  const auto full = parse_csv(kTrainCsv, model_schema());
  CHECK(kind_of([&] { fit_pipeline(full); }) == ErrorKind::leakage_guard);
  CHECK(kind_of([&] { fit_pipeline(full.with_provenance({Cohort::primary, Partition::test})); }) ==
        ErrorKind::leakage_guard);
  CHECK(kind_of([&] { fit_pipeline(full.with_provenance({Cohort::external, Partition::train})); }) ==
        ErrorKind::leakage_guard);
  const auto constant = parse_csv("age,smoking,hypertension,glucose,diabetes\n1,never,0,1,1\n2,never,0,1,1\n",
                                  model_schema())
                            .with_provenance({Cohort::primary, Partition::train});
  CHECK(kind_of([&] { fit_pipeline(constant); }) == ErrorKind::constant_outcome);
}

TEST_CASE("unseen categories are rejected") {
  const auto p = fit_pipeline(train_split());
  const auto test = parse_csv("age,smoking,hypertension,glucose,diabetes\n30,sometimes,0,90,1\n", model_schema());
  CHECK(kind_of([&] { apply_pipeline(p, test); }) == ErrorKind::unseen_category);
  CHECK(p.encoder().encode("smoking", "FORMER") == 2);
  CHECK(p.encoder().decode("smoking", 1) == "current");
}

TEST_CASE("external cohort is harmonized through the mapping") {
  PreprocessConfig cfg;
  cfg.mapping = pima_mapping();
  const auto p = fit_pipeline(train_split(), cfg);
  const auto ext = parse_csv("Glucose,Age,Insulin,Outcome\n0,30,5,1\n150,60,0,0\n", external_schema(),
                             Cohort::external);
  const auto out = apply_pipeline(p, ext);
  CHECK(out.filled_columns == std::vector<std::string>{"smoking", "hypertension"});
  CHECK(out.dropped_columns == std::vector<std::string>{"Insulin"});
  // Glucose 0 is missing -> training median 120 -> (120 - 90) / 60
  CHECK(out.features(0, 3) == doctest::Approx(0.5));
  CHECK(out.features(1, 3) == doctest::Approx(1.0));
  CHECK(out.features(0, 0) == doctest::Approx(0.25));
  CHECK(out.features(0, 1) == 0.0);
  CHECK(out.labels == std::vector<int>{1, 0});
  CHECK(out.provenance.cohort == Cohort::external);
}

TEST_CASE("harmonization errors") {
  PreprocessConfig cfg;
  cfg.mapping = pima_mapping();
  const auto p = fit_pipeline(train_split(), cfg);
  const auto mg_per_l = parse_csv("Glucose,Age,Insulin,Outcome\n5,30,5,1\n", external_schema("mmol/L"));
  CHECK(kind_of([&] { apply_pipeline(p, mg_per_l); }) == ErrorKind::unit_mismatch);

  auto bad = pima_mapping();
  bad.columns.emplace_back("Skin", "hypertension");
  const auto p2 = p.with_mapping(bad);
  const auto ext = parse_csv("Glucose,Age,Insulin,Outcome\n5,30,5,1\n", external_schema());
  CHECK(kind_of([&] { apply_pipeline(p2, ext); }) == ErrorKind::unmappable_column);

  // No mapping and no shared names.
  const auto p3 = fit_pipeline(train_split());
  const auto unrelated = parse_csv("Plasma,Outcome\n5,1\n", Schema::from_json(nlohmann::json::parse(
      R"({"columns": [{"name": "Plasma", "kind": "continuous"}, {"name": "Outcome", "kind": "outcome"}]})")));
  CHECK(kind_of([&] { apply_pipeline(p3, unrelated); }) == ErrorKind::unmappable_column);
  // Without a mapping, shared names pair regardless of case.
  CHECK(apply_pipeline(p3, ext).filled_columns == std::vector<std::string>{"smoking", "hypertension"});
}

TEST_CASE("mapping validation") {
  CHECK(kind_of([] {
          FeatureMapping::from_json(nlohmann::json::parse(R"({"columns": {"a": "x", "b": "x"}})"));
        }) == ErrorKind::config);
  CHECK(kind_of([] {
          FeatureMapping::from_json(nlohmann::json::parse(R"({"columns": {}, "fill_policy": "zero"})"));
        }) == ErrorKind::config);
  const auto m = pima_mapping();
  CHECK(FeatureMapping::from_json(m.to_json()) == m);
}

TEST_CASE("pipeline serialization round trip and version checks") {
  PreprocessConfig cfg;
  cfg.mapping = pima_mapping();
  const auto p = fit_pipeline(train_split(), cfg).with_calibration({1.5, -0.25, false});
  const auto text = dump_pipeline(p);
  const auto back = FrozenPipeline::from_json(nlohmann::json::parse(text));
  CHECK(back == p);
  CHECK(dump_pipeline(back) == text);

  auto j = nlohmann::json::parse(text);
  j["version"] = "hybridrisk-pipeline/0";
  CHECK(kind_of([&] { FrozenPipeline::from_json(j); }) == ErrorKind::version_mismatch);
  j = nlohmann::json::parse(text);
  j["fingerprint"] = "0000000000000000";
  CHECK(kind_of([&] { FrozenPipeline::from_json(j); }) == ErrorKind::corrupt_file);
  j = nlohmann::json::parse(text);
  j.erase("scaler");
  CHECK(kind_of([&] { FrozenPipeline::from_json(j); }) == ErrorKind::corrupt_file);
}

TEST_CASE("property: refitting is unaffected by test rows") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::string> rows;
    for (int i = 0; i < 60; ++i) {
      rows.push_back(std::to_string(rng.below(80)) + ",never," + std::to_string(rng.below(2)) + "," +
                     std::to_string(70 + rng.below(100)) + "," + (i % 3 == 0 ? "1" : "0"));
    }
    auto csv = [&] {
      std::string text = "age,smoking,hypertension,glucose,diabetes\n";
      for (const auto& r : rows) text += r + "\n";
      return parse_csv(text, model_schema());
    };
    const auto split = split_train_test(csv(), 0.7, 100 + trial);
    const auto reference = dump_pipeline(fit_pipeline(split.train));
    // Overwrite every feature of every test row; labels stay, so the split does too.
    for (auto r : split.test.source_rows()) {
      rows[r] = std::to_string(500 + rng.below(100)) + ",former,1,999," + (r % 3 == 0 ? "1" : "0");
    }
    const auto mutated = split_train_test(csv(), 0.7, 100 + trial);
    CHECK(mutated.test.source_rows() == split.test.source_rows());
    CHECK(dump_pipeline(fit_pipeline(mutated.train)) == reference);
  }
}

}  // TEST_SUITE
