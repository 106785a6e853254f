#include <doctest.h>

#include "logtriage/evaluation.hpp"
#include "test_support.hpp"

using namespace logtriage;

namespace {

constexpr Decision M = Decision::malicious;
constexpr Decision B = Decision::benign;

}  // namespace

TEST_CASE("hand-computed weighted F1") {
  const std::vector<Decision> labels{M, M, M, M, B, B, B, B, B, B};
  const std::vector<Decision> preds{M, M, M, B, M, B, B, B, B, B};
  const auto w = weighted_metrics(labels, preds);
  CHECK(w.malicious.f1 == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(w.benign.f1 == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
  CHECK(w.f1 == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(w.malicious.support == 4);
  CHECK(w.benign.support == 6);
}

TEST_CASE("weighted metrics match the confusion-matrix oracle") {
  Rng rng(7);
  for (int i = 0; i < 300; ++i) {
    const std::size_t n = 1 + rng.below(40);
    std::vector<Decision> labels(n);
    std::vector<Decision> preds(n);
    for (std::size_t j = 0; j < n; ++j) {
      labels[j] = rng.bernoulli(0.4) ? M : B;
      preds[j] = rng.bernoulli(0.4) ? M : B;
    }
    const auto w = weighted_metrics(labels, preds);
    const auto o = testing::metrics_oracle(labels, preds);
    CHECK(std::abs(w.precision - o.precision) < 1e-12);
    CHECK(std::abs(w.recall - o.recall) < 1e-12);
    CHECK(std::abs(w.f1 - o.f1) < 1e-12);
  }
}

TEST_CASE("0/0 is reported as 0 with a warning") {
  const auto w = weighted_metrics({B, B}, {B, B});
  CHECK(w.malicious.precision == 0.0);
  CHECK(w.f1 == doctest::Approx(1.0));
  CHECK_FALSE(w.warnings.empty());
  CHECK_THROWS(weighted_metrics({}, {}));
  CHECK_THROWS(weighted_metrics({B}, {B, M}));
}

TEST_CASE("category recall") {
  std::vector<LabeledApp> apps;
  std::vector<Decision> preds;
  for (int i = 0; i < 4; ++i) {
    apps.push_back({"s" + std::to_string(i), Category::benign_suspicious, 0, 10});
    preds.push_back(i < 2 ? M : B);
  }
  apps.push_back({"c", Category::compromised, 9, 10});
  preds.push_back(M);
  CHECK(category_recall(apps, preds, Category::benign_suspicious) == doctest::Approx(0.5));
  CHECK(category_recall(apps, preds, Category::compromised) == doctest::Approx(1.0));
  CHECK_THROWS_AS(category_recall(apps, preds, Category::benign_nonsuspicious), ConfigError);
}

TEST_CASE("threshold sweep filters and averages") {
  const std::vector<LabeledApp> apps{
      {"a", Category::compromised, 5, 10},
      {"b", Category::compromised, 3, 10},
      {"c", Category::benign_suspicious, 4, 10},
      {"d", Category::benign_nonsuspicious, 0, 10},
      {"e", Category::compromised, 0, 2},  // below the sign-in filter
  };
  const auto s = threshold_sweep(apps, {3, 4, 5}, 5);
  CHECK(s.n_apps == 4);
  REQUIRE(s.per_threshold.size() == 3);
  double f1 = 0;
  for (const auto& t : s.per_threshold) f1 += t.metrics.f1;
  CHECK(s.f1 == doctest::Approx(f1 / 3));
  // At threshold 5 only "a" is malicious.
  CHECK(s.per_threshold[2].category_recall.at(2) == doctest::Approx(0.5));
  CHECK(s.category_recall.at(2) == doctest::Approx((1.0 + 0.5 + 0.5) / 3));
  CHECK_THROWS_AS(threshold_sweep(apps, {}, 5), ConfigError);
  CHECK_THROWS_AS(threshold_sweep(apps, {3}, 100), ConfigError);
  CHECK(summary_to_text(s).find("average") != std::string::npos);
  CHECK(summary_to_json(s).find("\"per_threshold\"") != std::string::npos);
}
