#pragma once

#include <string>
#include <vector>

#include "logtriage/profile.hpp"
#include "logtriage/reasoner.hpp"

namespace logtriage {

struct ScoreTerm {
  std::string criterion_id;
  bool verdict = false;
  int delta_applied = 0;  // the criterion's delta when verdict is true, else 0

  bool operator==(const ScoreTerm&) const = default;
};

struct PriorityScore {
  int value = 0;  // clamped to [0, max_score]
  int raw = 0;    // unclamped sum
  std::string set_name;
  std::size_t segment_index = 0;
  std::vector<ScoreTerm> breakdown;

  bool operator==(const PriorityScore&) const = default;
};

/// Sum of the deltas of True criteria, clamped to [0, set.max_score()].
/// Throws ConfigError when the verdict keys differ from the set.
PriorityScore score_verdicts(const VerdictMap& verdicts, const CriteriaSet& set, std::size_t segment_index = 0);

/// Highest score; the earliest one wins ties.
PriorityScore aggregate_segments(const std::vector<PriorityScore>& scores);

/// Most frequent value; the largest among equally frequent ones.
int majority_vote(const std::vector<int>& run_scores);

enum class Decision { benign, malicious };

std::string_view to_string(Decision d) noexcept;

struct Classification {
  std::string app_id;
  int score = 0;
  int threshold = 0;
  Decision decision = Decision::benign;
  std::vector<int> votes;

  bool operator==(const Classification&) const = default;
};

Classification classify(const std::string& app_id, const std::vector<int>& run_scores, int threshold);

}  // namespace logtriage
