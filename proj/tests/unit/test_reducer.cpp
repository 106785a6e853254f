#include <doctest.h>

#include <algorithm>
#include <set>

#include "logtriage/reducer.hpp"
#include "logtriage/simgen.hpp"
#include "test_support.hpp"

using namespace logtriage;

namespace {

std::vector<std::vector<double>> random_points(Rng& rng, std::size_t n, std::size_t dim) {
  std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
  for (auto& p : pts) {
    for (double& x : p) x = rng.uniform(-10.0, 10.0);
  }
  return pts;
}

}  // namespace

TEST_CASE("max-min picks the point nearest the centroid, then the farthest") {
  const auto m = EmbeddingMatrix::from_rows({{0, 0}, {1, 0}, {5, 5}});
  CHECK(subsample_maxmin(m, 2) == std::vector<std::size_t>{1, 2});
}

TEST_CASE("max-min matches the brute-force oracle") {
  Rng rng(2024);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng.below(120);
    const std::size_t k = 1 + rng.below(15);
    const auto pts = random_points(rng, n, 1 + rng.below(6));
    CHECK(subsample_maxmin(EmbeddingMatrix::from_rows(pts), k) == testing::maxmin_oracle(pts, k));
  }
}

TEST_CASE("max-min returns distinct indices and caps at n") {
  Rng rng(5);
  const auto pts = random_points(rng, 12, 3);
  const auto sel = subsample_maxmin(EmbeddingMatrix::from_rows(pts), 50);
  CHECK(sel.size() == 12);
  CHECK(std::set<std::size_t>(sel.begin(), sel.end()).size() == 12);
  CHECK_THROWS_AS(subsample_maxmin(EmbeddingMatrix::from_rows(pts), 0), ConfigError);
}

TEST_CASE("average path length") {
  CHECK(average_path_length(1) == 0.0);
  CHECK(average_path_length(2) == doctest::Approx(1.0));
  // 2 H(255) - 2*255/256 with H(i) ~ ln(i) + Euler's constant
  CHECK(average_path_length(256) == doctest::Approx(2 * (std::log(255.0) + 0.5772156649) - 2 * 255.0 / 256).epsilon(1e-6));
}

TEST_CASE("anomaly scores lie in (0, 1) and rank a planted outlier first") {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> pts(200, std::vector<double>(8));
    for (auto& p : pts) {
      for (double& x : p) x = rng.normal();
    }
    // Uniform direction, Euclidean distance 10 (10 sigma) from the origin.
    std::vector<double> far(8);
    double norm = 0.0;
    for (double& x : far) {
      x = rng.normal();
      norm += x * x;
    }
    for (double& x : far) x *= 10.0 / std::sqrt(norm);
    pts.push_back(far);
    ForestParams params;
    params.seed = seed;
    const auto scores = anomaly_scores(EmbeddingMatrix::from_rows(pts), params);
    for (double s : scores) {
      CHECK(s > 0.0);
      CHECK(s < 1.0);
    }
    hits += std::max_element(scores.begin(), scores.end()) - scores.begin() == 200;
  }
  CHECK(hits >= 19);
}

TEST_CASE("forest parameters are validated") {
  ForestParams p;
  p.contamination = 0.6;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = ForestParams{};
  p.n_trees = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("reduction keeps between target_k and target_k plus the flagged share") {
  ScenarioSpec spec;
  spec.app_id = "app-reduce";
  spec.label = Category::benign_nonsuspicious;
  spec.n_benign_records = 2000;
  spec.benign_ips = {"20.0.0.1", "20.0.0.2", "20.0.0.3"};
  spec.seed = 3;
  const auto app = generate_app(spec);
  REQUIRE(app.records.size() == 2000);
  Segment seg{app.app_id, 0, app.records};
  const HashEmbeddingProvider provider;
  ForestParams params;
  params.seed = 9;
  const auto reduced = reduce_segment(seg, provider, 500, params);
  CHECK(reduced.kept.size() >= 500);
  CHECK(reduced.kept.size() <= 600);
  CHECK(reduced.trace.subsample_applied);
  CHECK(reduced.anomalies.size() == 2000);
  for (std::size_t i = 1; i < reduced.kept.size(); ++i) CHECK(reduced.kept[i - 1].index < reduced.kept[i].index);
  for (std::size_t f : reduced.trace.flagged) {
    CHECK(std::any_of(reduced.kept.begin(), reduced.kept.end(), [&](const KeptRecord& k) { return k.index == f; }));
  }
}

TEST_CASE("small segments are kept whole") {
  ScenarioSpec spec;
  spec.app_id = "app-small";
  spec.n_benign_records = 40;
  spec.benign_ips = {"20.0.0.1"};
  spec.seed = 1;
  const auto app = generate_app(spec);
  const auto reduced = reduce_segment(Segment{app.app_id, 0, app.records}, HashEmbeddingProvider(), 500, ForestParams{});
  CHECK(reduced.kept.size() == 40);
  CHECK_FALSE(reduced.trace.subsample_applied);
  CHECK(reduced.kept_records() == app.records);
}
