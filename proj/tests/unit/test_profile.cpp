#include <doctest.h>

#include "logtriage/profile.hpp"
#include "test_support.hpp"

using namespace logtriage;

TEST_CASE("the example profile parses into nine stages") {
  const auto p = load_profile(testing::fixture("ta_profile.yaml").string());
  REQUIRE(p.stages.size() == 9);
  CHECK(p.stages[0].name == "Initial Access");
  CHECK(p.stages[0].ttps == std::vector<std::string>{"Signin to sensitive resources."});
  const auto find = [&](const std::string& name) {
    for (const auto& s : p.stages) {
      if (s.name == name) return s;
    }
    FAIL("missing stage " << name);
    return ProfileStage{};
  };
  CHECK(find("Privilege Escalation").ttps.empty());
  CHECK(find("Reconnaissance").ttps.size() == 2);
  CHECK(find("Credential Access").ttps.size() == 2);
  CHECK(find("Lateral Movement").ttps[0] == "First access to an unusual resource.");
}

TEST_CASE("profiles survive a serialize/parse round trip") {
  const auto p = load_profile(testing::fixture("ta_profile.yaml").string());
  CHECK(parse_profile(serialize_profile(p)) == p);
}

TEST_CASE("duplicate stages are rejected by name") {
  const std::string doc = "profile: |\n  - Execution:\n      - a\n  - Execution:\n      - b\n";
  try {
    parse_profile(doc);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("Execution") != std::string::npos);
  }
}

TEST_CASE("built-in criteria sets") {
  const auto base = builtin_criteria(CriteriaSetName::baseline);
  CHECK(base.size() == 15);
  CHECK(base.max_score() == 11);
  CHECK(base.negative_sum() == -6);
  const auto focused = builtin_criteria(CriteriaSetName::focused);
  CHECK(focused.size() == 11);
  CHECK(focused.max_score() == 8);
  CHECK(focused.negative_sum() == -5);
  CHECK(focused.find(criterion_ids::kOauthAbuse)->delta == 2);
  CHECK(base.find(criterion_ids::kAllIpsBenign)->delta == -3);
  CHECK(focused.find(criterion_ids::kAllIpsBenign)->delta == -2);
  CHECK_THROWS_AS(builtin_criteria("nonsense"), ConfigError);
}

TEST_CASE("guidances follow table order") {
  const auto base = render_guidances(builtin_criteria(CriteriaSetName::baseline));
  REQUIRE(base.size() == 15);
  CHECK(base[0].find("Initial Access") != std::string::npos);
  const auto focused = render_guidances(builtin_criteria(CriteriaSetName::focused));
  CHECK(focused[1].find("OAuth Abuse") != std::string::npos);
}

TEST_CASE("criteria files") {
  const auto set = parse_criteria(
      "criteria:\n"
      "  - {text: Token replay observed, delta: 2, source: ta_profile}\n"
      "  - {text: All the suspicious IP addresses are benign, delta: -2}\n");
  CHECK(set.name() == CriteriaSetName::custom);
  CHECK(set.max_score() == 2);
  CHECK(set.criteria()[0].id == "token_replay_observed");
  CHECK_THROWS(parse_criteria("criteria:\n  - {text: x, delta: 0}\n"));
  CHECK_THROWS(parse_criteria("criteria:\n  - {text: x, delta: 1}\n  - {text: X, delta: 1}\n"));
}

TEST_CASE("slugs") {
  CHECK(slugify("Persistence observed.") == "persistence_observed");
  CHECK(slugify("  OAuth  Abuse!! ") == "oauth_abuse");
}
