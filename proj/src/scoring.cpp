#include "logtriage/scoring.hpp"

#include <algorithm>
#include <map>

namespace logtriage {

PriorityScore score_verdicts(const VerdictMap& verdicts, const CriteriaSet& set, std::size_t segment_index) {
  if (!verdicts.matches(set)) {
    throw ConfigError("verdicts do not match the criteria of set '" + set.label() + "'");
  }
  PriorityScore score;
  score.set_name = set.label();
  score.segment_index = segment_index;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& c = set.criteria()[i];
    const bool v = verdicts.entries()[i].value;
    const int delta = v ? c.delta : 0;
    score.raw += delta;
    score.breakdown.push_back({c.id, v, delta});
  }
  score.value = std::clamp(score.raw, set.min_score(), set.max_score());
  return score;
}

PriorityScore aggregate_segments(const std::vector<PriorityScore>& scores) {
  if (scores.empty()) throw ConfigError("aggregate_segments: no scores");
  const PriorityScore* best = &scores.front();
  for (const auto& s : scores) {
    if (s.set_name != best->set_name) throw ConfigError("aggregate_segments: scores from different criteria sets");
    if (s.value > best->value) best = &s;
  }
  return *best;
}

int majority_vote(const std::vector<int>& run_scores) {
  if (run_scores.empty()) throw ConfigError("majority_vote: no run scores");
  std::map<int, int> counts;
  for (int s : run_scores) ++counts[s];
  int best = 0;
  int best_count = 0;
  for (const auto& [value, count] : counts) {
    if (count >= best_count) {
      best = value;
      best_count = count;
    }
  }
  return best;
}

std::string_view to_string(Decision d) noexcept {
  return d == Decision::malicious ? "malicious" : "benign";
}

Classification classify(const std::string& app_id, const std::vector<int>& run_scores, int threshold) {
  if (threshold < 0) throw ConfigError("classify: threshold must be >= 0");
  Classification c;
  c.app_id = app_id;
  c.score = majority_vote(run_scores);
  c.threshold = threshold;
  c.decision = c.score >= threshold ? Decision::malicious : Decision::benign;
  c.votes = run_scores;
  return c;
}

}  // namespace logtriage
