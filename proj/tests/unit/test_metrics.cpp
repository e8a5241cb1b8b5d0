#include <cmath>
#include <vector>

#include "doctest.h"
#include "hybridrisk/metrics.hpp"

using namespace hybridrisk;
using namespace hybridrisk::metrics;

TEST_SUITE("metrics") {

TEST_CASE("auroc matches hand-counted pairs") {
  // 3 of 4 positive/negative pairs ordered correctly.
  const ScoredPredictions sp({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1});
  CHECK(auroc(sp) == 0.75);
  CHECK(roc_curve(sp).area == 0.75);
}

TEST_CASE("auroc counts ties as one half") {
  const ScoredPredictions sp({0.5, 0.5, 0.5, 0.5}, {0, 1, 0, 1});
  CHECK(auroc(sp) == 0.5);
  const ScoredPredictions sp2({0.2, 0.6, 0.6, 0.9}, {0, 0, 1, 1});
  // pairs: (0.6,0.2)=1 (0.6,0.6)=0.5 (0.9,*)=2
  CHECK(auroc(sp2) == doctest::Approx(3.5 / 4.0).epsilon(1e-15));
}

TEST_CASE("average precision on a three-row example") {
  const ScoredPredictions sp({0.9, 0.8, 0.7}, {1, 0, 1});
  CHECK(auprc(sp) == 5.0 / 6.0);
  const auto pr = pr_curve(sp);
  REQUIRE(pr.points.size() == 4);
  CHECK(pr.points[0].x == 0.0);
  CHECK(pr.points[0].y == 1.0);
  CHECK(pr.baseline == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("average precision with tied scores uses one threshold") {
  // Both rows share a threshold: recall 1 at precision 1/2.
  const ScoredPredictions sp({0.5, 0.5}, {1, 0});
  CHECK(auprc(sp) == 0.5);
}

TEST_CASE("brier score") {
  const ScoredPredictions sp({0.8, 0.4}, {1, 0});
  CHECK(brier(sp) == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("confusion counts and thresholded metrics") {
  const ScoredPredictions sp({0.9, 0.6, 0.5, 0.2, 0.1}, {1, 0, 1, 1, 0});
  const auto c = confusion_at_threshold(sp, 0.5);
  CHECK(c == ConfusionCounts{2, 1, 1, 1});
  const auto m = thresholded_metrics(c);
  CHECK(m.accuracy == doctest::Approx(0.6));
  CHECK(m.precision == doctest::Approx(2.0 / 3.0));
  CHECK(m.recall == doctest::Approx(2.0 / 3.0));
  CHECK(m.f1 == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("thresholded metrics define empty ratios as zero") {
  const auto m = thresholded_metrics(ConfusionCounts{0, 0, 3, 2});
  CHECK(m.precision == 0.0);
  CHECK(m.recall == 0.0);
  CHECK(m.f1 == 0.0);
  CHECK(m.accuracy == doctest::Approx(0.4));
}

TEST_CASE("calibration fit matches a reference logistic regression") {
  // statsmodels Logit of y on logit(s), s = sigmoid(1.5 m - 0.2)
  std::vector<double> s;
  const std::vector<int> y{1, 1, 1, 1, 0, 0, 0, 1, 1, 1, 1, 1, 0, 0, 0, 1, 1, 1, 0, 0,
                           0, 1, 1, 1, 0, 0, 0, 0, 0, 1, 1, 1, 0, 0, 0, 0, 1, 1, 0, 0};
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = static_cast<double>(i);
    const double m = std::sin(0.9 * d) + 0.5 * (std::cos(1.7 * d) + 0.1 * d / 40.0);
    s.push_back(1.0 / (1.0 + std::exp(-(1.5 * m - 0.2))));
  }
  const auto fit = calibration_fit(ScoredPredictions(s, y));
  CHECK(fit.slope == doctest::Approx(4.192793801819237).epsilon(1e-7));
  CHECK(fit.intercept == doctest::Approx(0.540870011089743).epsilon(1e-7));
}

TEST_CASE("calibration fit rejects constant scores") {
  CHECK_THROWS_AS(calibration_fit(ScoredPredictions({0.3, 0.3, 0.3}, {0, 1, 0})), Error);
  // Saturated scores collapse after clipping.
  try {
    calibration_fit(ScoredPredictions({1.0 - 1e-12, 1.0}, {0, 1}));
    FAIL("expected DegenerateScores");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::degenerate_scores);
  }
}

TEST_CASE("reliability bins") {
  const ScoredPredictions sp({0.05, 0.15, 0.12, 0.95, 1.0}, {0, 0, 1, 1, 1});
  const auto bins = reliability_bins(sp, 10);
  REQUIRE(bins.size() == 10);
  CHECK(bins[0].count == 1);
  CHECK(bins[1].count == 2);
  CHECK(bins[1].mean_predicted == doctest::Approx(0.135));
  CHECK(bins[1].observed_frequency == doctest::Approx(0.5));
  CHECK(bins[9].count == 2);  // 1.0 lands in the last bin
  CHECK(bins[5].count == 0);
  CHECK_THROWS_AS(reliability_bins(sp, 1), Error);
}

TEST_CASE("input validation") {
  auto kind_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::config;  // unreachable in these checks
  };
  CHECK(kind_of([] { ScoredPredictions({0.1}, {0, 1}); }) == ErrorKind::dimension_mismatch);
  CHECK(kind_of([] { ScoredPredictions({}, {}); }) == ErrorKind::empty_file);
  CHECK(kind_of([] { ScoredPredictions({0.1, 0.2}, {0, 2}); }) == ErrorKind::outcome_not_binary);
  CHECK(kind_of([] { auroc(ScoredPredictions({0.1, 0.2}, {1, 1})); }) == ErrorKind::single_class);
  CHECK(kind_of([] { auprc(ScoredPredictions({0.1, 0.2}, {0, 0})); }) == ErrorKind::no_positives);
  CHECK(kind_of([] { confusion_at_threshold(ScoredPredictions({0.1}, {0}), 1.0); }) == ErrorKind::config);
  CHECK_THROWS_AS(ScoredPredictions({1.5}, {1}), Error);
}

TEST_CASE("midranks average ties") {
  const auto r = midranks(std::vector<double>{3.0, 1.0, 3.0, 2.0});
  CHECK(r == std::vector<double>{3.5, 1.0, 3.5, 2.0});
}

TEST_CASE("roc curve runs from origin to (1, 1)") {
  const ScoredPredictions sp({0.9, 0.7, 0.7, 0.3, 0.1}, {1, 0, 1, 0, 1});
  const auto roc = roc_curve(sp);
  CHECK(roc.points.front().x == 0.0);
  CHECK(roc.points.front().y == 0.0);
  CHECK(roc.points.back().x == 1.0);
  CHECK(roc.points.back().y == 1.0);
  CHECK(roc.points.size() == 5);  // origin + 4 distinct thresholds
  CHECK(roc.area == doctest::Approx(auroc(sp)).epsilon(1e-15));
}

TEST_CASE("property: auroc is invariant under monotone transforms and flips under negation") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 + rng.below(60);
    std::vector<double> s(n), t(n), neg(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = std::round(rng.uniform() * 20.0) / 20.0;
      t[i] = s[i] * s[i] * s[i];
      neg[i] = 1.0 - s[i];
      y[i] = i < 2 ? static_cast<int>(i) : (rng.uniform() < 0.4 ? 1 : 0);
    }
    const double a = auroc(s, y);
    CHECK(auroc(t, y) == doctest::Approx(a).epsilon(1e-14));
    CHECK(auroc(neg, y) == doctest::Approx(1.0 - a).epsilon(1e-14));
    CHECK(auprc(s, y) >= 0.0);
    CHECK(auprc(s, y) <= 1.0);
  }
}

}  // TEST_SUITE
