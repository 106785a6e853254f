#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "logtriage/reasoner.hpp"

namespace logtriage {

enum class RuleKind { check, code };

/// A review rule. Codes are validators over the parsed report; checks add a
/// natural-language instruction to review prompts.
struct ReviewRule {
  std::string id;
  RuleKind kind = RuleKind::code;
  std::string description;
  /// Code rules: case-insensitive regex the behavior or activities text must match.
  std::string pattern;
  /// Code rules: only enforced when this criterion's verdict is True (empty = always).
  std::string when;
  /// Check rules: instruction appended to review prompts.
  std::string prompt_template;
  /// Check rules: request a review pass even when no code is violated.
  bool always = false;
};

namespace review_codes {
inline constexpr std::string_view kTags = "tags";
inline constexpr std::string_view kMultiStage = "multi_stage";
inline constexpr std::string_view kIpBenign = "ip_benign";
inline constexpr std::string_view kSensitiveMention = "sensitive_mention";
}  // namespace review_codes

/// Parses a YAML list of {id, kind, description, pattern | template, when, always}.
std::vector<ReviewRule> parse_review_rules(std::string_view doc);
std::vector<ReviewRule> load_review_rules(const std::string& path);

struct Violation {
  std::string rule_id;
  std::string detail;
  std::vector<std::string> criteria;  // disputed criterion ids
  bool behavior = false;              // the behavior summary needs rewriting

  bool operator==(const Violation&) const = default;
  auto operator<=>(const Violation&) const = default;
};

/// IP addresses mentioned in the evidence and entities of suspicious activities.
std::vector<std::string> named_ips(const TriageReport& report);

/// Evaluates the built-in codes plus the code-kind rules of `extra`.
/// Violations come back sorted, so the result does not depend on rule order.
std::vector<Violation> run_codes(const TriageReport& report, const EnrichmentBundle& enrichment, const CriteriaSet& set,
                                 const std::vector<ReviewRule>& extra = {});

struct ReviewConfig {
  std::size_t max_rounds = 2;
  bool force = false;  // one review pass even when the report is clean
  std::vector<ReviewRule> rules;
};

/// Records and enrichment the reviewer may quote back to the reasoner.
struct ReviewEvidence {
  const EnrichmentBundle* enrichment = nullptr;
  const std::vector<LogRecord>* records = nullptr;
};

inline constexpr std::string_view kReviewMarker = "# Review request";
inline constexpr std::string_view kReviewProblemsHeading = "Problems found";
inline constexpr std::string_view kReviewDisputedHeading = "Disputed triage items";
inline constexpr std::string_view kReviewRelatedHeading = "Related verdicts";
inline constexpr std::string_view kReviewNamedIpsHeading = "Named IP addresses";
inline constexpr std::string_view kReviewRevisedItemsHeading = "Revised triage items";
inline constexpr std::string_view kReviewRevisedBehaviorHeading = "Revised behavior";
inline constexpr std::string_view kReviewBehaviorRequest = "Also rewrite the behavior summary";

/// Body of the first "# <name>" section, up to the next "# " heading.
std::string markdown_section(std::string_view text, std::string_view name);

/// Small review prompt quoting only the disputed items and the evidence they depend on.
PromptBundle build_review_prompt(const TriageReport& report, const std::vector<Violation>& violations,
                                 const CriteriaSet& set, const ReviewEvidence& evidence,
                                 const std::vector<ReviewRule>& rules);

/// One review round: re-invokes the backend and applies the revised items and
/// behavior. Returns the report unchanged when there is nothing to review.
TriageReport run_checks(const TriageReport& report, const std::vector<Violation>& violations,
                        const ReasonerBackend& backend, const CriteriaSet& set, const ReviewEvidence& evidence,
                        const ReviewConfig& config = {});

struct ReviewOutcome {
  std::vector<Violation> violations;  // found on the original report
  std::vector<Violation> remaining;   // still present after the last round
  TriageReport report;                // last revision
  VerdictMap corrected_verdicts;      // original verdicts when unresolved
  std::size_t review_invocations = 0;
  bool unresolved = false;
};

/// run_codes, then up to max_rounds of run_checks until the codes pass.
ReviewOutcome review(const TriageReport& report, const CriteriaSet& set, const ReasonerBackend& backend,
                     const ReviewEvidence& evidence, const ReviewConfig& config = {});

}  // namespace logtriage
