#include <doctest.h>

#include "logtriage/reasoner.hpp"
#include "logtriage/simgen.hpp"
#include "test_support.hpp"

using namespace logtriage;

namespace {

ReducedSegment reduce_all(const ApplicationBundle& app, std::size_t target_k = 500) {
  return reduce_segment(Segment{app.app_id, 0, app.records}, HashEmbeddingProvider(), target_k, ForestParams{});
}

ApplicationBundle compromised_app() {
  ScenarioSpec spec;
  spec.app_id = "app-prompt";
  spec.label = Category::compromised;
  spec.stages_enacted = {Stage::initial_access, Stage::credential_access};
  spec.n_benign_records = 6;
  spec.n_malicious_records = 4;
  spec.benign_ips = {"20.1.1.1"};
  spec.sensitive_resources = {"Azure Key Vault"};
  spec.seed = 4;
  return generate_app(spec);
}

}  // namespace

TEST_CASE("prompts fill every template slot") {
  const auto profile = load_profile(testing::fixture("ta_profile.yaml").string());
  const auto set = builtin_criteria(CriteriaSetName::baseline);
  const auto app = compromised_app();
  REQUIRE(app.records.size() >= 10);
  const auto prompts = build_prompts(profile, set, reduce_all(app), app.enrichment);

  CHECK(prompts.system_text == system_prompt());
  CHECK(prompts.user_text.find("# Threat Actor Profile") != std::string::npos);
  CHECK(prompts.user_text.find("# Application Logs") != std::string::npos);
  CHECK(prompts.user_text.find("# Enrichment Data") != std::string::npos);
  CHECK(prompts.user_text.find('{') == std::string::npos);
  CHECK(parse_prompt_guidances(prompts.user_text).size() == 15);
  CHECK(prompts.token_estimate == estimate_tokens(prompts.system_text) + estimate_tokens(prompts.user_text));
}

TEST_CASE("log and enrichment tables are recoverable from the prompt") {
  const auto app = compromised_app();
  const auto prompts = build_prompts(ThreatActorProfile{}, builtin_criteria(CriteriaSetName::baseline), reduce_all(app),
                                     app.enrichment);
  const Evidence ev = parse_prompt_evidence(prompts.user_text);
  REQUIRE(ev.records.size() == app.records.size());
  for (std::size_t i = 0; i < ev.records.size(); ++i) {
    CHECK(ev.records[i].ip == app.records[i].ip);
    CHECK(ev.records[i].operation == app.records[i].operation);
    CHECK(ev.records[i].result_code == app.records[i].result_code);
  }
  CHECK(ev.enrichment.ip_details.size() == app.enrichment.ip_details.size());
  CHECK(ev.enrichment.permissions == app.enrichment.permissions);
}

TEST_CASE("missing enrichment is stated in the prompt") {
  const auto app = compromised_app();
  const auto prompts =
      build_prompts(ThreatActorProfile{}, builtin_criteria(CriteriaSetName::focused), reduce_all(app), EnrichmentBundle{});
  const auto pos = prompts.user_text.find("# Enrichment Data");
  REQUIRE(pos != std::string::npos);
  CHECK(prompts.user_text.find("unavailable", pos) != std::string::npos);
}

TEST_CASE("token budget") {
  const auto app = compromised_app();
  PromptOptions tight;
  tight.token_budget = 100;
  CHECK_THROWS_AS(build_prompts(ThreatActorProfile{}, builtin_criteria(CriteriaSetName::baseline), reduce_all(app),
                                app.enrichment, tight),
                  TokenBudgetExceeded);

  ScenarioSpec spec;
  spec.app_id = "app-budget";
  spec.n_benign_records = 500;
  spec.benign_ips = {"20.0.0.1", "20.0.0.2"};
  spec.seed = 8;
  const auto big = generate_app(spec);
  const auto prompts = build_prompts(load_profile(testing::fixture("ta_profile.yaml").string()),
                                     builtin_criteria(CriteriaSetName::baseline), reduce_all(big), big.enrichment);
  CHECK(prompts.token_estimate <= PromptOptions{}.token_budget);
}

TEST_CASE("estimate_tokens rounds up a quarter of the length") {
  CHECK(estimate_tokens("") == 0);
  CHECK(estimate_tokens("abcd") == 1);
  CHECK(estimate_tokens("abcde") == 2);
}
