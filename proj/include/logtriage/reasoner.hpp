#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "logtriage/corpus.hpp"
#include "logtriage/profile.hpp"
#include "logtriage/reducer.hpp"
#include "logtriage/rules.hpp"

namespace logtriage {

// ---------------------------------------------------------------------------
// Prompts

struct PromptBundle {
  std::string system_text;
  std::string user_text;
  std::size_t token_estimate = 0;
};

struct PromptOptions {
  std::size_t token_budget = 128000;
};

class TokenBudgetExceeded : public Error {
 public:
  TokenBudgetExceeded(std::size_t estimate, std::size_t budget)
      : Error("prompt needs ~" + std::to_string(estimate) + " tokens, budget is " + std::to_string(budget)),
        estimate_(estimate),
        budget_(budget) {}

  std::size_t estimate() const noexcept { return estimate_; }
  std::size_t budget() const noexcept { return budget_; }

 private:
  std::size_t estimate_;
  std::size_t budget_;
};

const std::string& system_prompt();

/// Four characters per token, rounded up.
std::size_t estimate_tokens(std::string_view text) noexcept;

/// Fills the user prompt template. Logs are rendered as pipe tables grouped by
/// log type; enrichment as labeled tables plus explanations of the result
/// codes that occur. Throws TokenBudgetExceeded when the estimate is over
/// budget.
PromptBundle build_prompts(const ThreatActorProfile& profile, const CriteriaSet& set, const ReducedSegment& reduced,
                           const EnrichmentBundle& enrichment, const PromptOptions& options = {});

// Rendering helpers shared with the review prompt.
std::string render_profile_section(const ThreatActorProfile& profile);
std::string render_log_section(const std::vector<LogRecord>& records);
std::string render_enrichment_section(const EnrichmentBundle& enrichment, const std::vector<LogRecord>& records);
std::string render_ip_table(const std::vector<IpDetail>& rows);

/// Reads the log and enrichment tables back out of prompt text.
Evidence parse_prompt_evidence(std::string_view text);
/// Numbered guidance lines of the first guidance block, without numbers.
std::vector<std::string> parse_prompt_guidances(std::string_view user_text);

// ---------------------------------------------------------------------------
// Reports

struct Verdict {
  std::string criterion_id;
  bool value = false;
  bool tagged = true;  // false when the line carried no [True]/[False]
  std::size_t item_number = 0;
  std::string raw_line;
};

/// Verdicts keyed by criterion id, in criteria-set order.
class VerdictMap {
 public:
  VerdictMap() = default;
  explicit VerdictMap(std::vector<Verdict> entries) : entries_(std::move(entries)) {}

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }
  const std::vector<Verdict>& entries() const noexcept { return entries_; }

  const Verdict* find(std::string_view id) const noexcept;
  Verdict* find(std::string_view id) noexcept;
  /// Throws ConfigError for unknown ids.
  bool value(std::string_view id) const;
  void set(std::string_view id, bool value);

  /// Every id of the set present, in order, and nothing else.
  bool matches(const CriteriaSet& set) const noexcept;
  bool all_tagged() const noexcept;

  /// Compares ids, values and tags; raw lines are ignored.
  bool operator==(const VerdictMap& other) const noexcept;

 private:
  std::vector<Verdict> entries_;
};

VerdictMap make_verdicts(const CriteriaSet& set, const std::vector<bool>& values);

struct SuspiciousActivity {
  std::string stage;
  std::string evidence;
  std::vector<std::string> entities;
  std::vector<std::string> dates;

  bool operator==(const SuspiciousActivity&) const = default;
};

struct TriageReport {
  std::string behavior_summary;
  std::vector<SuspiciousActivity> suspicious_activities;
  VerdictMap verdicts;
  std::string raw_response;
  std::size_t run_id = 0;
  std::size_t segment_index = 0;
};

enum class ReportErrorKind { empty, missing_section, unmatched_criterion, unmatched_line, missing_tag };

class ReportParseError : public ParseError {
 public:
  ReportParseError(ReportErrorKind kind, const std::string& what) : ParseError(what), kind_(kind) {}
  ReportErrorKind kind() const noexcept { return kind_; }

 private:
  ReportErrorKind kind_;
};

struct ReportParseOptions {
  /// Keep lines without a tag (value false, tagged false) instead of failing;
  /// the reviewer repairs them.
  bool allow_missing_tags = false;
};

inline constexpr std::string_view kBehaviorHeading = "High level behavior of the application";
inline constexpr std::string_view kActivitiesHeading = "Suspicious activities and entities involved";
inline constexpr std::string_view kTriageHeading = "Triage priority level of the application";

/// Locates the three report sections and matches each numbered triage line to
/// a criterion by token containment (case and punctuation insensitive).
TriageReport parse_report(std::string_view raw, const CriteriaSet& set, const ReportParseOptions& options = {});

/// Numbered "text [True]" lines of `text` matched against `candidates` only.
/// Used to read revised items out of review responses. Lines that match no
/// candidate are ignored; candidates without a tagged line are absent.
std::vector<Verdict> parse_verdict_lines(std::string_view text, const std::vector<const Criterion*>& candidates);

/// Markdown rendering with the three section headings; parse_report reads it back.
std::string render_report(const TriageReport& report, const CriteriaSet& set);

/// Containment similarity in [0, 1] between a report line and a criterion text.
double criterion_similarity(std::string_view line, std::string_view criterion_text);

// ---------------------------------------------------------------------------
// Backends

enum class BackendKind { remote, mock };

class ReasonerBackend {
 public:
  virtual ~ReasonerBackend() = default;

  virtual std::string name() const = 0;
  virtual BackendKind kind() const = 0;
  /// Raw response text. Must be safe to call concurrently.
  virtual std::string complete(const PromptBundle& prompts) const = 0;
};

class EmptyResponse : public Error {
 public:
  using Error::Error;
};

/// complete() plus the empty-response check.
std::string invoke(const ReasonerBackend& backend, const PromptBundle& prompts);

struct MockOptions {
  double noise = 0.0;  // per-verdict flip probability
  std::uint64_t seed = 0;
};

/// Deterministic stand-in for a language model. Reads the rendered logs and
/// enrichment out of the prompt, applies the shared rule table, and emits a
/// well-formed report. Each verdict flips with probability `noise`, seeded by
/// (seed, prompt text).
class MockReasoner final : public ReasonerBackend {
 public:
  explicit MockReasoner(MockOptions options);

  std::string name() const override { return "mock"; }
  BackendKind kind() const override { return BackendKind::mock; }
  std::string complete(const PromptBundle& prompts) const override;

  const MockOptions& options() const noexcept { return options_; }

 private:
  std::string triage_response(const PromptBundle& prompts) const;
  std::string review_response(const PromptBundle& prompts) const;

  MockOptions options_;
};

struct RemoteReasonerOptions {
  std::string endpoint;
  std::string api_key;
  std::string model;
  /// JSON pointer to the response text.
  std::string response_path = "/choices/0/message/content";
  double temperature = 0.0;
  int max_retries = 3;
  std::chrono::milliseconds backoff{500};
  std::chrono::seconds timeout{120};
  std::size_t max_in_flight = 4;

  /// Reads REASONER_ENDPOINT / REASONER_API_KEY.
  static RemoteReasonerOptions from_env();
};

/// Chat-completion client: {"messages": [{"role": "system", ...}, {"role": "user", ...}]}.
class RemoteReasoner final : public ReasonerBackend {
 public:
  explicit RemoteReasoner(RemoteReasonerOptions options);
  ~RemoteReasoner() override;

  std::string name() const override { return "remote"; }
  BackendKind kind() const override { return BackendKind::remote; }
  std::string complete(const PromptBundle& prompts) const override;

 private:
  struct State;
  RemoteReasonerOptions options_;
  std::unique_ptr<State> state_;
};

}  // namespace logtriage
