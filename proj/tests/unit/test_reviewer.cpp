#include <doctest.h>

#include <algorithm>

#include "logtriage/reviewer.hpp"
#include "test_support.hpp"

using namespace logtriage;

namespace {

const CriteriaSet& baseline() {
  static const CriteriaSet set = builtin_criteria(CriteriaSetName::baseline);
  return set;
}

TriageReport fixture_report() {
  return parse_report(read_file(testing::fixture("triage_report.md").string()), baseline());
}

// Only Initial Access stays True while item 11 still claims several stages.
TriageReport single_stage_report() {
  TriageReport r = fixture_report();
  for (auto id : {criterion_ids::kExecution, criterion_ids::kPersistence, criterion_ids::kPrivilegeEscalation,
                  criterion_ids::kDefenseEvasion, criterion_ids::kCredentialAccess, criterion_ids::kDataCollection}) {
    r.verdicts.set(id, false);
  }
  return r;
}

bool has_rule(const std::vector<Violation>& vs, std::string_view id) {
  return std::any_of(vs.begin(), vs.end(), [&](const Violation& v) { return v.rule_id == id; });
}

class CountingBackend final : public ReasonerBackend {
 public:
  explicit CountingBackend(std::string text) : text_(std::move(text)) {}
  std::string name() const override { return "counting"; }
  BackendKind kind() const override { return BackendKind::mock; }
  std::string complete(const PromptBundle& p) const override {
    ++calls;
    last_prompt = p.user_text;
    return text_;
  }
  mutable int calls = 0;
  mutable std::string last_prompt;

 private:
  std::string text_;
};

}  // namespace

TEST_CASE("the example report passes every built-in code") {
  CHECK(run_codes(fixture_report(), EnrichmentBundle{}, baseline()).empty());
}

TEST_CASE("multi-stage claim with a single stage is a violation citing both items") {
  const auto vs = run_codes(single_stage_report(), EnrichmentBundle{}, baseline());
  REQUIRE(vs.size() == 1);
  CHECK(vs[0].rule_id == review_codes::kMultiStage);
  CHECK(vs[0].detail.find("item 11") != std::string::npos);
  CHECK(vs[0].detail.find("item 1)") != std::string::npos);
  CHECK(vs[0].criteria == std::vector<std::string>{std::string(criterion_ids::kMultipleStages)});
}

TEST_CASE("a known-benign ip reported as suspicious contradicts item 14") {
  EnrichmentBundle e;
  e.ip_details.push_back(IpDetail{"45.12.7.9", "Dublin", "Corp", false, true, {}});
  const auto vs = run_codes(fixture_report(), e, baseline());
  REQUIRE(vs.size() == 1);
  CHECK(vs[0].rule_id == review_codes::kIpBenign);
  CHECK(named_ips(fixture_report()) == std::vector<std::string>{"45.12.7.9"});
}

TEST_CASE("sensitive permissions must be named in the behavior summary") {
  EnrichmentBundle e;
  e.permissions.push_back(Permission{"Finance SQL Database", "Read", true});
  CHECK(has_rule(run_codes(fixture_report(), e, baseline()), review_codes::kSensitiveMention));
  e.permissions[0].resource = "Azure Key Vault";
  CHECK(run_codes(fixture_report(), e, baseline()).empty());
}

TEST_CASE("untagged lines are a violation") {
  TriageReport r = fixture_report();
  r.verdicts.find(criterion_ids::kReconnaissance)->tagged = false;
  const auto vs = run_codes(r, EnrichmentBundle{}, baseline());
  REQUIRE(vs.size() == 1);
  CHECK(vs[0].rule_id == review_codes::kTags);
}

TEST_CASE("run_codes ignores rule order") {
  const auto rules = parse_review_rules(
      "rules:\n"
      "  - {id: names_vault, kind: code, description: d, pattern: 'key ?vault'}\n"
      "  - {id: names_dates, kind: code, description: d, pattern: '2023-', when: initial_access_observed}\n"
      "  - {id: ask_ips, kind: check, description: d, template: 'Double-check the IP classification.'}\n");
  REQUIRE(rules.size() == 3);
  EnrichmentBundle e;
  e.ip_details.push_back(IpDetail{"45.12.7.9", "Dublin", "Corp", false, true, {}});
  e.permissions.push_back(Permission{"Finance SQL Database", "Read", true});
  const TriageReport r = single_stage_report();
  auto reversed = rules;
  std::reverse(reversed.begin(), reversed.end());
  const auto a = run_codes(r, e, baseline(), rules);
  CHECK(a == run_codes(r, e, baseline(), reversed));
  CHECK(has_rule(a, "names_dates"));
  CHECK_FALSE(has_rule(a, "names_vault"));
  CHECK_THROWS(parse_review_rules("rules:\n  - {id: x, kind: code, pattern: a}\n  - {id: x, kind: code, pattern: b}\n"));
  CHECK_THROWS(parse_review_rules("rules:\n  - {id: x, kind: code, pattern: '('}\n"));
}

TEST_CASE("a clean report is returned unchanged without invoking the backend") {
  CountingBackend backend("never used");
  const TriageReport r = fixture_report();
  const auto out = review(r, baseline(), backend, ReviewEvidence{});
  CHECK(out.violations.empty());
  CHECK(out.review_invocations == 0);
  CHECK(backend.calls == 0);
  CHECK(out.corrected_verdicts == r.verdicts);
  CHECK_FALSE(out.unresolved);
}

TEST_CASE("the mock repairs an inconsistent multi-stage item") {
  const MockReasoner mock(MockOptions{0.0, 1});
  const auto out = review(single_stage_report(), baseline(), mock, ReviewEvidence{});
  REQUIRE(out.violations.size() == 1);
  CHECK_FALSE(out.unresolved);
  CHECK(out.review_invocations >= 1);
  CHECK(out.review_invocations <= 2);
  CHECK_FALSE(out.corrected_verdicts.value(criterion_ids::kMultipleStages));
  TriageReport fixed = out.report;
  fixed.verdicts = out.corrected_verdicts;
  CHECK(run_codes(fixed, EnrichmentBundle{}, baseline()).empty());
}

TEST_CASE("the review prompt quotes only the disputed item and related verdicts") {
  CountingBackend backend("# Revised triage items\n11. More than one stages of kill chain observed [False]\n");
  const auto out = review(single_stage_report(), baseline(), backend, ReviewEvidence{});
  CHECK(backend.calls == 1);
  CHECK_FALSE(out.unresolved);
  CHECK(backend.last_prompt.rfind(kReviewMarker, 0) == 0);
  CHECK(backend.last_prompt.find("# Disputed triage items") != std::string::npos);
  CHECK(backend.last_prompt.find("More than one stages of kill chain observed") != std::string::npos);
  CHECK(backend.last_prompt.find("All the suspicious IP addresses are benign") == std::string::npos);
}

TEST_CASE("a missing tag is restored by one mock review") {
  TriageReport r = fixture_report();
  r.verdicts.find(criterion_ids::kReconnaissance)->tagged = false;
  const MockReasoner mock(MockOptions{0.0, 1});
  // No log evidence: the mock falls back to the rule table on an empty log.
  const auto out = review(r, baseline(), mock, ReviewEvidence{});
  CHECK(out.review_invocations == 1);
  CHECK_FALSE(out.unresolved);
  CHECK(out.report.verdicts.find(criterion_ids::kReconnaissance)->tagged);
}

TEST_CASE("violations that persist are reported unresolved with the original verdicts") {
  CountingBackend backend("# Revised triage items\n11. More than one stages of kill chain observed [True]\n");
  ReviewConfig config;
  config.max_rounds = 2;
  const TriageReport r = single_stage_report();
  const auto out = review(r, baseline(), backend, ReviewEvidence{}, config);
  CHECK(out.unresolved);
  CHECK(backend.calls == 2);
  CHECK(out.review_invocations == 2);
  CHECK(out.corrected_verdicts == r.verdicts);
  CHECK(out.remaining.size() == 1);
}

TEST_CASE("review is idempotent once resolved") {
  const MockReasoner mock(MockOptions{0.0, 1});
  const auto first = review(single_stage_report(), baseline(), mock, ReviewEvidence{});
  REQUIRE_FALSE(first.unresolved);
  TriageReport again = first.report;
  again.verdicts = first.corrected_verdicts;
  const auto second = review(again, baseline(), mock, ReviewEvidence{});
  CHECK(second.violations.empty());
  CHECK(second.review_invocations == 0);
  CHECK(second.corrected_verdicts == first.corrected_verdicts);
}

TEST_CASE("markdown sections") {
  const std::string text = "# A\none\n# B\ntwo\nthree\n";
  CHECK(trim(markdown_section(text, "B")) == "two\nthree");
  CHECK(markdown_section(text, "C").empty());
}
