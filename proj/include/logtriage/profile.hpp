#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "logtriage/common.hpp"

namespace logtriage {

struct ProfileStage {
  std::string name;
  std::vector<std::string> ttps;

  bool operator==(const ProfileStage&) const = default;
};

/// Kill-chain stages of a threat actor, each with the TTPs it is known for.
struct ThreatActorProfile {
  std::optional<std::string> description;
  std::vector<ProfileStage> stages;

  bool operator==(const ThreatActorProfile&) const = default;
};

/// Parses a YAML document with a top-level `profile` key. The value may be a
/// literal block holding the staged bullet list or the list itself. Tabs are
/// expanded to 8 columns first. An optional `description` key is kept.
ThreatActorProfile parse_profile(std::string_view doc);
ThreatActorProfile load_profile(const std::string& path);
std::string serialize_profile(const ThreatActorProfile& profile);

enum class CriterionSource { ta_profile, other };

struct Criterion {
  std::string id;
  CriterionSource source = CriterionSource::other;
  std::string text;
  int delta = 0;

  bool operator==(const Criterion&) const = default;
};

enum class CriteriaSetName { baseline, focused, custom };

std::string_view to_string(CriteriaSetName name) noexcept;

class CriteriaSet {
 public:
  /// Validates ids (unique, non-empty), texts (non-empty) and deltas (non-zero).
  CriteriaSet(CriteriaSetName name, std::vector<Criterion> criteria);

  CriteriaSetName name() const noexcept { return name_; }
  std::string label() const { return std::string(to_string(name_)); }
  const std::vector<Criterion>& criteria() const noexcept { return criteria_; }
  std::size_t size() const noexcept { return criteria_.size(); }

  /// Sum of the positive deltas.
  int max_score() const noexcept;
  int min_score() const noexcept { return 0; }
  int negative_sum() const noexcept;

  const Criterion* find(std::string_view id) const noexcept;
  /// Position of the criterion, or size() when absent.
  std::size_t position(std::string_view id) const noexcept;

 private:
  CriteriaSetName name_;
  std::vector<Criterion> criteria_;
};

/// Lowercase words joined by '_', punctuation dropped.
std::string slugify(std::string_view text);

CriteriaSet builtin_criteria(CriteriaSetName name);
CriteriaSet builtin_criteria(std::string_view name);

/// Loads a custom set: a YAML/JSON list of {id?, source, text, delta} rows, or
/// a map with a `criteria` list. Missing ids are slugged from the text.
CriteriaSet load_criteria_file(const std::string& path);
CriteriaSet parse_criteria(std::string_view doc);

/// Resolves "baseline", "focused" or a file path.
CriteriaSet resolve_criteria(const std::string& name_or_path);

/// "1. <text>", "2. <text>", ... in set order.
std::vector<std::string> render_guidances(const CriteriaSet& set);

// Ids of the built-in criteria that other modules reason about.
namespace criterion_ids {
inline constexpr std::string_view kInitialAccess = "initial_access_observed";
inline constexpr std::string_view kExecution = "execution_observed";
inline constexpr std::string_view kPersistence = "persistence_observed";
inline constexpr std::string_view kReconnaissance = "reconnaissance_observed";
inline constexpr std::string_view kPrivilegeEscalation = "privilege_escalation_observed";
inline constexpr std::string_view kDefenseEvasion = "defense_evasion_observed";
inline constexpr std::string_view kCredentialAccess = "credential_access_observed";
inline constexpr std::string_view kLateralMovement = "lateral_movement_observed";
inline constexpr std::string_view kDataCollection = "data_collection_observed";
inline constexpr std::string_view kExtensivePermissions =
    "application_has_extensive_permissions_can_access_sensitive_resources";
inline constexpr std::string_view kMultipleStages = "more_than_one_stages_of_kill_chain_observed";
inline constexpr std::string_view kAllUnsuccessful = "all_access_attempts_were_unsuccessful_and_resulted_in_errors";
inline constexpr std::string_view kLacksSensitiveBaseline = "application_lacks_access_sensitive_resources";
inline constexpr std::string_view kLacksSensitiveFocused = "application_lacks_access_to_sensitive_resources";
inline constexpr std::string_view kAllIpsBenign = "all_the_suspicious_ip_addresses_are_benign";
inline constexpr std::string_view kIpsNotHigh =
    "all_the_suspicious_ip_addresses_were_linked_to_resources_not_considered_high";

inline constexpr std::string_view kUnusualAccess = "unusual_access_attempt_observed";
inline constexpr std::string_view kOauthAbuse = "oauth_abuse_observed";
inline constexpr std::string_view kDataCollectionActivities = "data_collection_activities_observed";
inline constexpr std::string_view kProxyInfrastructure = "use_of_proxy_infrastructure_observed";
inline constexpr std::string_view kMultipleMethods = "more_than_one_method_of_threat_actor_observed";
inline constexpr std::string_view kSensitivePattern = "a_suspicious_pattern_of_accessing_sensitive_resources_observed";
}  // namespace criterion_ids

}  // namespace logtriage
