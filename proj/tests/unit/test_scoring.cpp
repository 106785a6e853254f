#include <doctest.h>

#include <algorithm>

#include "logtriage/scoring.hpp"
#include "test_support.hpp"

using namespace logtriage;

namespace {

VerdictMap with_true(const CriteriaSet& set, std::initializer_list<std::string_view> ids) {
  std::vector<bool> values(set.size(), false);
  for (auto id : ids) values[set.position(id)] = true;
  return make_verdicts(set, values);
}

VerdictMap positives(const CriteriaSet& set) {
  std::vector<bool> values;
  for (const auto& c : set.criteria()) values.push_back(c.delta > 0);
  return make_verdicts(set, values);
}

}  // namespace

TEST_CASE("score extremes") {
  const auto base = builtin_criteria(CriteriaSetName::baseline);
  const auto focused = builtin_criteria(CriteriaSetName::focused);
  CHECK(score_verdicts(positives(base), base).value == 11);
  CHECK(score_verdicts(positives(focused), focused).value == 8);
  const auto negatives = with_true(base, {criterion_ids::kAllUnsuccessful, criterion_ids::kLacksSensitiveBaseline,
                                          criterion_ids::kAllIpsBenign, criterion_ids::kIpsNotHigh});
  const auto s = score_verdicts(negatives, base);
  CHECK(s.raw == -6);
  CHECK(s.value == 0);
  CHECK(score_verdicts(make_verdicts(base, std::vector<bool>(15, false)), base).value == 0);
}

TEST_CASE("focused arithmetic") {
  const auto focused = builtin_criteria(CriteriaSetName::focused);
  const auto v =
      with_true(focused, {criterion_ids::kOauthAbuse, criterion_ids::kProxyInfrastructure, criterion_ids::kAllIpsBenign});
  CHECK(score_verdicts(v, focused).value == 1);
}

TEST_CASE("the breakdown sums to the raw score") {
  const auto base = builtin_criteria(CriteriaSetName::baseline);
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    std::vector<bool> values;
    for (std::size_t j = 0; j < base.size(); ++j) values.push_back(rng.bernoulli(0.5));
    const auto s = score_verdicts(make_verdicts(base, values), base);
    int sum = 0;
    for (const auto& t : s.breakdown) sum += t.delta_applied;
    CHECK(sum == s.raw);
    CHECK(s.value == std::clamp(s.raw, 0, 11));
  }
}

TEST_CASE("mismatched verdicts are rejected") {
  const auto base = builtin_criteria(CriteriaSetName::baseline);
  const auto focused = builtin_criteria(CriteriaSetName::focused);
  CHECK_THROWS_AS(score_verdicts(positives(focused), base), ConfigError);
}

TEST_CASE("segment aggregation takes the maximum") {
  PriorityScore a;
  a.value = 2;
  a.set_name = "baseline";
  PriorityScore b = a;
  b.value = 9;
  b.segment_index = 1;
  CHECK(aggregate_segments({a, b}).value == 9);
  CHECK(aggregate_segments({a, b}).segment_index == 1);
  CHECK_THROWS(aggregate_segments({}));
  PriorityScore c = b;
  c.set_name = "focused";
  CHECK_THROWS(aggregate_segments({a, c}));
}

TEST_CASE("majority vote laws") {
  CHECK(majority_vote({3, 3, 3, 2, 4}) == 3);
  CHECK(majority_vote({2, 5, 2, 5, 1}) == 5);
  CHECK(majority_vote({7}) == 7);
  CHECK_THROWS(majority_vote({}));
  Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    std::vector<int> v(1 + rng.below(9));
    for (int& x : v) x = static_cast<int>(rng.below(12));
    const int m = majority_vote(v);
    auto shuffled = v;
    rng.shuffle(shuffled);
    CHECK(majority_vote(shuffled) == m);
    const auto count = [&](int x) { return std::count(v.begin(), v.end(), x); };
    for (int x : v) {
      CHECK(count(x) <= count(m));
      if (count(x) == count(m)) CHECK(x <= m);
    }
  }
}

TEST_CASE("classification against a threshold") {
  const auto c = classify("app", {3, 3, 3, 2, 4}, 3);
  CHECK(c.score == 3);
  CHECK(c.decision == Decision::malicious);
  CHECK(classify("app", {3, 3, 3, 2, 4}, 4).decision == Decision::benign);
  CHECK_THROWS(classify("app", {1}, -1));
}
