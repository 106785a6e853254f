#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "logtriage/corpus.hpp"

// The rule table shared by the synthetic corpus generator and the mock
// reasoner. The generator emits exactly these signatures for each enacted
// kill-chain stage, and the mock detects them, so the pipeline can be checked
// end to end without a language model.
namespace logtriage {

enum class Stage {
  initial_access,
  execution,
  persistence,
  reconnaissance,
  privilege_escalation,
  defense_evasion,
  credential_access,
  lateral_movement,
  data_collection,
};

inline constexpr std::array<Stage, 9> kAllStages = {
    Stage::initial_access,       Stage::execution,       Stage::persistence,
    Stage::reconnaissance,       Stage::privilege_escalation, Stage::defense_evasion,
    Stage::credential_access,    Stage::lateral_movement, Stage::data_collection,
};

std::string_view stage_name(Stage stage) noexcept;
/// Case-insensitive; accepts the display name ("Initial Access").
std::optional<Stage> stage_from_name(std::string_view name) noexcept;
/// Baseline criterion id for "<Stage> observed".
std::string stage_criterion_id(Stage stage);

namespace signatures {
inline constexpr std::string_view kSignin = "Sign-in";
inline constexpr std::array<std::string_view, 2> kExecutionOps = {
    "PATCH /servicePrincipals", "POST /servicePrincipals/synchronization/jobs/start"};
inline constexpr std::array<std::string_view, 2> kPersistenceOps = {"POST /users", "POST /applications"};
inline constexpr std::array<std::string_view, 3> kReconOps = {
    "GET /groups/transitiveMembers", "GET /directoryObjects/checkMemberGroups", "GET /servicePrincipals"};
inline constexpr std::string_view kKustoQuery = "Query";
inline constexpr std::array<std::string_view, 2> kPrivilegeEscalationOps = {
    "POST /roleManagement/directory/roleAssignments", "POST /servicePrincipals/appRoleAssignments"};
inline constexpr std::string_view kSecretList = "SecretList";
inline constexpr std::string_view kSecretGet = "SecretGet";
inline constexpr std::array<std::string_view, 2> kStorageReadOps = {"GetBlob", "ReadFile"};

// Benign baseline operations; none of these match a stage signature on their own.
inline constexpr std::array<std::string_view, 3> kBenignGraphOps = {"GET /users", "GET /me", "GET /sites"};
inline constexpr std::string_view kStorageWrite = "PutBlob";

inline constexpr std::string_view kSuccess = "0";
inline constexpr std::string_view kInvalidSecret = "AADSTS7000215";
inline constexpr std::string_view kExpiredSecret = "AADSTS7000222";
inline constexpr std::string_view kInvalidCredentials = "AADSTS50126";
inline constexpr std::string_view kForbidden = "403";
}  // namespace signatures

bool is_success(std::string_view result_code) noexcept;
/// Human-readable explanation of known result codes, empty if unknown.
std::string_view explain_result_code(std::string_view result_code) noexcept;

/// What a reasoner can see: rendered log rows plus enrichment.
struct Evidence {
  std::vector<LogRecord> records;  // chronological
  EnrichmentBundle enrichment;
};

struct StageFinding {
  Stage stage = Stage::initial_access;
  std::vector<std::size_t> rows;  // indices into Evidence::records
  std::set<std::string> ips;
  std::set<std::string> dates;
  std::set<std::string> resources;
};

struct RuleVerdicts {
  std::array<bool, 9> stages{};
  std::vector<StageFinding> findings;  // one per observed stage, stage order

  bool extensive_permissions = false;
  bool all_attempts_unsuccessful = false;
  bool all_flagged_ips_benign = false;
  bool flagged_ips_not_high = false;

  bool unusual_access = false;
  bool oauth_abuse = false;
  bool proxy_infrastructure = false;
  bool data_collection = false;
  bool sensitive_pattern = false;

  std::set<std::string> untrusted_ips;  // not known-benign
  std::set<std::string> flagged_ips;    // untrusted, proxy, or with failed attempts
  std::set<std::string> failed_ips;
  std::set<std::string> sensitive_resources;

  bool stage(Stage s) const noexcept { return stages[static_cast<std::size_t>(s)]; }
  int stage_count() const noexcept;
  int focused_method_count() const noexcept;

  /// Verdict for a built-in criterion id (either set); nullopt for unknown ids.
  std::optional<bool> verdict_for(std::string_view criterion_id) const;
};

RuleVerdicts evaluate_rules(const Evidence& evidence);

/// Resources that are sensitive per the enrichment: sensitive permissions and
/// high-sensitivity resources accessed by any ip.
std::set<std::string> sensitive_resources(const EnrichmentBundle& enrichment);

}  // namespace logtriage
