#include "logtriage/rules.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "logtriage/profile.hpp"

namespace logtriage {

std::string_view stage_name(Stage stage) noexcept {
  switch (stage) {
    case Stage::initial_access: return "Initial Access";
    case Stage::execution: return "Execution";
    case Stage::persistence: return "Persistence";
    case Stage::reconnaissance: return "Reconnaissance";
    case Stage::privilege_escalation: return "Privilege Escalation";
    case Stage::defense_evasion: return "Defense Evasion";
    case Stage::credential_access: return "Credential Access";
    case Stage::lateral_movement: return "Lateral Movement";
    case Stage::data_collection: return "Data Collection";
  }
  return "";
}

std::optional<Stage> stage_from_name(std::string_view name) noexcept {
  const std::string slug = slugify(name);
  for (Stage s : kAllStages) {
    if (slugify(stage_name(s)) == slug) return s;
  }
  return std::nullopt;
}

std::string stage_criterion_id(Stage stage) {
  return slugify(stage_name(stage)) + "_observed";
}

bool is_success(std::string_view result_code) noexcept {
  const std::string code = to_lower(trim(result_code));
  if (code.empty() || code == "0" || code == "success" || code == "ok") return true;
  if (code.size() == 3 && code[0] == '2' && std::isdigit(static_cast<unsigned char>(code[1])) &&
      std::isdigit(static_cast<unsigned char>(code[2]))) {
    return true;
  }
  return false;
}

std::string_view explain_result_code(std::string_view result_code) noexcept {
  static const std::map<std::string_view, std::string_view> kExplanations = {
      {"0", "Success."},
      {"AADSTS7000215", "Invalid client secret provided."},
      {"AADSTS7000222", "The provided client secret keys are expired."},
      {"AADSTS50126", "Invalid credentials."},
      {"AADSTS700016", "Application not found in the directory."},
      {"401", "Unauthorized: the caller is not authenticated."},
      {"403", "Forbidden: the caller lacks permission for the operation."},
      {"404", "Not found."},
      {"429", "Too many requests: the caller is being throttled."},
  };
  const auto it = kExplanations.find(result_code);
  return it == kExplanations.end() ? std::string_view{} : it->second;
}

namespace {

template <std::size_t N>
bool one_of(std::string_view op, const std::array<std::string_view, N>& ops) {
  return std::find(ops.begin(), ops.end(), op) != ops.end();
}

}  // namespace

int RuleVerdicts::stage_count() const noexcept {
  return static_cast<int>(std::count(stages.begin(), stages.end(), true));
}

int RuleVerdicts::focused_method_count() const noexcept {
  return static_cast<int>(unusual_access) + static_cast<int>(oauth_abuse) + static_cast<int>(data_collection) +
         static_cast<int>(proxy_infrastructure);
}

std::optional<bool> RuleVerdicts::verdict_for(std::string_view id) const {
  namespace ids = criterion_ids;
  for (Stage s : kAllStages) {
    if (id == stage_criterion_id(s)) return stage(s);
  }
  if (id == ids::kExtensivePermissions) return extensive_permissions;
  if (id == ids::kMultipleStages) return stage_count() >= 2;
  if (id == ids::kAllUnsuccessful) return all_attempts_unsuccessful;
  if (id == ids::kLacksSensitiveBaseline || id == ids::kLacksSensitiveFocused) return !extensive_permissions;
  if (id == ids::kAllIpsBenign) return all_flagged_ips_benign;
  if (id == ids::kIpsNotHigh) return flagged_ips_not_high;
  if (id == ids::kUnusualAccess) return unusual_access;
  if (id == ids::kOauthAbuse) return oauth_abuse;
  if (id == ids::kDataCollectionActivities) return data_collection;
  if (id == ids::kProxyInfrastructure) return proxy_infrastructure;
  if (id == ids::kMultipleMethods) return focused_method_count() >= 2;
  if (id == ids::kSensitivePattern) return sensitive_pattern;
  return std::nullopt;
}

std::set<std::string> sensitive_resources(const EnrichmentBundle& enrichment) {
  std::set<std::string> out;
  for (const auto& p : enrichment.permissions) {
    if (p.sensitive) out.insert(p.resource);
  }
  for (const auto& d : enrichment.ip_details) {
    for (const auto& r : d.resources_accessed) {
      if (r.sensitivity == Sensitivity::high) out.insert(r.resource);
    }
  }
  return out;
}

RuleVerdicts evaluate_rules(const Evidence& evidence) {
  namespace sig = signatures;
  const auto& records = evidence.records;
  const auto& enrichment = evidence.enrichment;

  RuleVerdicts v;
  v.sensitive_resources = sensitive_resources(enrichment);
  std::set<std::string> permitted;
  for (const auto& p : enrichment.permissions) {
    permitted.insert(p.resource);
    if (p.sensitive) v.extensive_permissions = true;
  }

  auto untrusted = [&](const std::string& ip) {
    if (ip.empty()) return false;
    const IpDetail* d = enrichment.find_ip(ip);
    return d == nullptr || !d->is_benign_known;
  };
  auto proxy = [&](const std::string& ip) {
    const IpDetail* d = enrichment.find_ip(ip);
    return d != nullptr && d->is_proxy;
  };

  std::array<StageFinding, 9> findings;
  for (Stage s : kAllStages) findings[static_cast<std::size_t>(s)].stage = s;
  auto hit = [&](Stage s, std::size_t row) {
    auto& f = findings[static_cast<std::size_t>(s)];
    f.rows.push_back(row);
    f.ips.insert(records[row].ip);
    f.dates.insert(format_date(records[row].ts));
    if (!records[row].resource.empty()) f.resources.insert(records[row].resource);
  };

  bool any_untrusted = false;
  bool all_untrusted_failed = true;
  std::vector<std::size_t> secret_lists;
  std::vector<std::size_t> storage_reads;

  for (std::size_t i = 0; i < records.size(); ++i) {
    const LogRecord& r = records[i];
    if (r.ip.empty()) continue;
    const bool ok = is_success(r.result_code);
    const bool bad_ip = untrusted(r.ip);
    if (!ok) v.failed_ips.insert(r.ip);
    if (bad_ip || proxy(r.ip) || !ok) v.flagged_ips.insert(r.ip);
    if (!bad_ip) continue;

    v.untrusted_ips.insert(r.ip);
    any_untrusted = true;
    if (r.log_type == LogType::signin) v.unusual_access = true;
    if (!ok) continue;
    all_untrusted_failed = false;

    if (v.sensitive_resources.count(r.resource) != 0) v.sensitive_pattern = true;

    switch (r.log_type) {
      case LogType::signin:
        hit(Stage::initial_access, i);
        if (proxy(r.ip)) hit(Stage::defense_evasion, i);
        if (!r.resource.empty() && permitted.count(r.resource) == 0) hit(Stage::lateral_movement, i);
        break;
      case LogType::msgraph:
        if (one_of(r.operation, sig::kExecutionOps)) hit(Stage::execution, i);
        if (one_of(r.operation, sig::kPersistenceOps)) hit(Stage::persistence, i);
        if (one_of(r.operation, sig::kReconOps)) hit(Stage::reconnaissance, i);
        if (one_of(r.operation, sig::kPrivilegeEscalationOps)) hit(Stage::privilege_escalation, i);
        break;
      case LogType::kusto:
        hit(Stage::reconnaissance, i);
        break;
      case LogType::keyvault:
        if (r.operation == sig::kSecretList) {
          secret_lists.push_back(i);
        } else if (r.operation == sig::kSecretGet && !secret_lists.empty()) {
          // A Get only counts once a List from an untrusted ip preceded it.
          if (findings[static_cast<std::size_t>(Stage::credential_access)].rows.empty()) {
            for (std::size_t l : secret_lists) hit(Stage::credential_access, l);
          }
          hit(Stage::credential_access, i);
        }
        break;
      case LogType::storage:
        if (one_of(r.operation, sig::kStorageReadOps)) storage_reads.push_back(i);
        break;
      case LogType::other:
        break;
    }
  }

  std::set<std::string> read_resources;
  for (std::size_t i : storage_reads) read_resources.insert(records[i].resource);
  if (read_resources.size() >= 2) {
    for (std::size_t i : storage_reads) hit(Stage::data_collection, i);
  }

  for (Stage s : kAllStages) {
    auto& f = findings[static_cast<std::size_t>(s)];
    if (f.rows.empty()) continue;
    v.stages[static_cast<std::size_t>(s)] = true;
    v.findings.push_back(std::move(f));
  }
  if (v.stage(Stage::credential_access)) v.sensitive_pattern = true;

  v.all_attempts_unsuccessful = any_untrusted && all_untrusted_failed;
  v.all_flagged_ips_benign = std::all_of(v.flagged_ips.begin(), v.flagged_ips.end(), [&](const std::string& ip) {
    const IpDetail* d = enrichment.find_ip(ip);
    return d != nullptr && d->is_benign_known;
  });
  v.flagged_ips_not_high = std::all_of(v.flagged_ips.begin(), v.flagged_ips.end(), [&](const std::string& ip) {
    const IpDetail* d = enrichment.find_ip(ip);
    if (d == nullptr) return true;
    return std::none_of(d->resources_accessed.begin(), d->resources_accessed.end(),
                        [](const ResourceAccess& a) { return a.sensitivity == Sensitivity::high; });
  });
  v.oauth_abuse = v.stage(Stage::execution) || v.stage(Stage::persistence) || v.stage(Stage::privilege_escalation);
  v.proxy_infrastructure = v.stage(Stage::defense_evasion);
  v.data_collection = v.stage(Stage::data_collection);
  return v;
}

}  // namespace logtriage
