#include "logtriage/simgen.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <set>

namespace logtriage {

namespace fs = std::filesystem;
namespace sig = signatures;

namespace {

enum class Kind { graph, vault, storage, database, config, cluster, api };

struct Resource {
  std::string_view name;
  Kind kind;
  bool sensitive;
};

constexpr Resource kCatalog[] = {
    {"Microsoft Graph Directory", Kind::graph, true},
    {"SharePoint Sites", Kind::graph, true},
    {"Azure Key Vault", Kind::vault, true},
    {"Finance SQL Database", Kind::database, true},
    {"Customer Data Storage", Kind::storage, true},
    {"Microsoft Graph Profile", Kind::graph, false},
    {"Telemetry Storage", Kind::storage, false},
    {"Reports Storage", Kind::storage, false},
    {"Build Artifacts Storage", Kind::storage, false},
    {"App Configuration", Kind::config, false},
    {"Usage Analytics Cluster", Kind::cluster, false},
};

// Never granted to any application.
constexpr Resource kUnusual[] = {
    {"HR Payroll API", Kind::api, true},
    {"Legacy Admin Portal", Kind::api, true},
    {"Tenant Backup Vault", Kind::vault, true},
};

const Resource* find_resource(std::string_view name) {
  for (const auto& r : kCatalog) {
    if (r.name == name) return &r;
  }
  for (const auto& r : kUnusual) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

bool is_sensitive(std::string_view name) {
  const Resource* r = find_resource(name);
  return r != nullptr && r->sensitive;
}

std::vector<const Resource*> catalog_where(bool sensitive, std::optional<Kind> kind = std::nullopt) {
  std::vector<const Resource*> out;
  for (const auto& r : kCatalog) {
    if (r.sensitive == sensitive && (!kind || r.kind == *kind)) out.push_back(&r);
  }
  return out;
}

constexpr std::string_view kCities[] = {"Seattle", "Dublin", "Amsterdam", "Singapore", "Sao Paulo", "Frankfurt"};
constexpr std::string_view kBenignIsps[] = {"Microsoft Corporation", "Contoso Networks", "Fabrikam Telecom"};
constexpr std::string_view kHostileIsps[] = {"Bulletproof Hosting Ltd", "Anon VPS", "Cheap Cloud SRL"};
constexpr std::string_view kProxyIsps[] = {"Tor Exit Relay", "Residential Proxy Network", "VPN Gateway Co"};

template <typename T, std::size_t N>
std::string pick_of(Rng& rng, const T (&items)[N]) {
  return std::string(items[rng.below(N)]);
}

std::string random_ip(Rng& rng, int first_octet) {
  return std::to_string(first_octet) + "." + std::to_string(rng.below(256)) + "." + std::to_string(rng.below(256)) +
         "." + std::to_string(1 + rng.below(254));
}

std::string fresh_ip(Rng& rng, int first_octet, std::set<std::string>& used) {
  for (;;) {
    std::string ip = random_ip(rng, first_octet);
    if (used.insert(ip).second) return ip;
  }
}

struct Template {
  LogType type;
  std::string operation;
  std::string resource;
};

std::vector<Template> benign_templates(const std::vector<Permission>& permissions) {
  std::vector<Template> out;
  for (const auto& p : permissions) {
    const Resource* r = find_resource(p.resource);
    out.push_back({LogType::signin, std::string(sig::kSignin), p.resource});
    switch (r->kind) {
      case Kind::graph:
        for (auto op : sig::kBenignGraphOps) out.push_back({LogType::msgraph, std::string(op), p.resource});
        break;
      case Kind::vault:
        out.push_back({LogType::keyvault, std::string(sig::kSecretGet), p.resource});
        break;
      case Kind::storage:
        out.push_back({LogType::storage, std::string(sig::kStorageWrite), p.resource});
        out.push_back({LogType::storage, "GetBlob", p.resource});
        break;
      case Kind::cluster:
        out.push_back({LogType::kusto, std::string(sig::kKustoQuery), p.resource});
        break;
      case Kind::database:
      case Kind::config:
      case Kind::api:
        out.push_back({LogType::other, "Read", p.resource});
        break;
    }
  }
  return out;
}

struct Event {
  std::int64_t ms = 0;
  LogRecord record;
};

LogRecord make_record(const ScenarioSpec& spec, LogType type, std::string op, std::string resource, std::string ip,
                      std::string_view code, std::string_view agent) {
  LogRecord r;
  r.app_id = spec.app_id;
  r.log_type = type;
  r.ip = std::move(ip);
  r.operation = std::move(op);
  r.resource = std::move(resource);
  r.result_code = std::string(code);
  r.actor = "svc-" + spec.app_id;
  r.extra["user_agent"] = std::string(agent);
  return r;
}

constexpr std::string_view kSdkAgent = "azsdk-net/1.11";
constexpr std::string_view kToolAgent = "python-requests/2.31";

void attack_events(const ScenarioSpec& spec, Rng& rng, const std::string& ip, const std::vector<Permission>& permissions,
                   std::vector<Event>& out) {
  auto enacted = [&](Stage s) {
    return std::find(spec.stages_enacted.begin(), spec.stages_enacted.end(), s) != spec.stages_enacted.end();
  };
  std::vector<LogRecord> burst;
  auto add = [&](LogType type, std::string_view op, std::string_view resource) {
    burst.push_back(make_record(spec, type, std::string(op), std::string(resource), ip, sig::kSuccess, kToolAgent));
  };

  std::string target;
  for (const auto& p : permissions) {
    if (p.sensitive) {
      target = p.resource;
      break;
    }
  }
  if (target.empty()) target = permissions.front().resource;

  if (enacted(Stage::initial_access)) {
    const auto failures = rng.below(3);
    for (std::size_t i = 0; i < failures; ++i) {
      burst.push_back(make_record(spec, LogType::signin, std::string(sig::kSignin), target, ip, sig::kInvalidSecret,
                                  kToolAgent));
    }
    add(LogType::signin, sig::kSignin, target);
  }
  if (enacted(Stage::lateral_movement)) add(LogType::signin, sig::kSignin, kUnusual[rng.below(std::size(kUnusual))].name);
  if (enacted(Stage::reconnaissance)) {
    const auto n = 1 + rng.below(3);
    for (std::size_t i = 0; i < n; ++i) add(LogType::msgraph, sig::kReconOps[i], "Microsoft Graph Directory");
    if (rng.bernoulli(0.5)) add(LogType::kusto, sig::kKustoQuery, "Usage Analytics Cluster");
  }
  if (enacted(Stage::execution)) add(LogType::msgraph, sig::kExecutionOps[rng.below(2)], "Microsoft Graph Directory");
  if (enacted(Stage::privilege_escalation)) {
    add(LogType::msgraph, sig::kPrivilegeEscalationOps[rng.below(2)], "Microsoft Graph Directory");
  }
  if (enacted(Stage::persistence)) add(LogType::msgraph, sig::kPersistenceOps[rng.below(2)], "Microsoft Graph Directory");
  if (enacted(Stage::credential_access)) {
    add(LogType::keyvault, sig::kSecretList, "Azure Key Vault");
    const auto gets = 1 + rng.below(3);
    for (std::size_t i = 0; i < gets; ++i) add(LogType::keyvault, sig::kSecretGet, "Azure Key Vault");
  }
  if (enacted(Stage::data_collection)) {
    auto stores = catalog_where(false, Kind::storage);
    const auto sensitive_stores = catalog_where(true, Kind::storage);
    stores.insert(stores.end(), sensitive_stores.begin(), sensitive_stores.end());
    rng.shuffle(stores);
    const auto n = 2 + rng.below(2);
    for (std::size_t i = 0; i < n; ++i) add(LogType::storage, sig::kStorageReadOps[i % 2], stores[i]->name);
  }
  while (burst.size() < spec.n_malicious_records) add(LogType::msgraph, "GET /me", "Microsoft Graph Profile");

  std::int64_t t = spec.start.millis + static_cast<std::int64_t>(rng.uniform(0.2, 0.8) * static_cast<double>(spec.span_ms));
  for (auto& r : burst) {
    t += 5000 + static_cast<std::int64_t>(rng.below(55000));
    out.push_back({t, std::move(r)});
  }
}

std::int64_t random_time(const ScenarioSpec& spec, Rng& rng) {
  return spec.start.millis + static_cast<std::int64_t>(rng.uniform() * static_cast<double>(spec.span_ms));
}

}  // namespace

void ScenarioSpec::validate() const {
  if (app_id.empty()) throw ConfigError("scenario without app_id");
  std::set<Stage> unique(stages_enacted.begin(), stages_enacted.end());
  if (unique.size() != stages_enacted.size()) throw ConfigError(app_id + ": duplicate enacted stage");
  const bool patterns = failed_signin_ips > 0 || expired_credential || developer_proxy;
  auto has = [&](Stage s) { return unique.count(s) != 0; };
  switch (label) {
    case Category::benign_nonsuspicious:
      if (!stages_enacted.empty() || patterns || !proxy_ips.empty()) {
        throw ConfigError(app_id + ": label 0 admits no stages, proxies or suspicious patterns");
      }
      break;
    case Category::benign_suspicious:
      if (!stages_enacted.empty() || !proxy_ips.empty()) throw ConfigError(app_id + ": label 1 admits no stages");
      if (!patterns) throw ConfigError(app_id + ": label 1 needs at least one suspicious-but-benign pattern");
      break;
    case Category::compromised:
      if (stages_enacted.size() < 2) throw ConfigError(app_id + ": label 2 needs at least two enacted stages");
      if (patterns) throw ConfigError(app_id + ": label 2 does not take benign-suspicious patterns");
      if (has(Stage::defense_evasion) && (proxy_ips.empty() || !has(Stage::initial_access))) {
        throw ConfigError(app_id + ": Defense Evasion needs Initial Access through a proxy ip");
      }
      if (has(Stage::initial_access) && !proxy_ips.empty() && !has(Stage::defense_evasion)) {
        throw ConfigError(app_id + ": signing in through a proxy enacts Defense Evasion");
      }
      if (has(Stage::lateral_movement) && !has(Stage::initial_access)) {
        throw ConfigError(app_id + ": Lateral Movement needs Initial Access");
      }
      break;
  }
  if (n_benign_records > 0 && benign_ips.empty()) throw ConfigError(app_id + ": benign records need benign ips");
  for (const auto& r : sensitive_resources) {
    const Resource* res = find_resource(r);
    if (res == nullptr || !res->sensitive) throw ConfigError(app_id + ": '" + r + "' is not a sensitive resource");
  }
  if (span_ms <= 0) throw ConfigError(app_id + ": span must be positive");
}

ApplicationBundle generate_app(const ScenarioSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::set<std::string> used_ips(spec.benign_ips.begin(), spec.benign_ips.end());
  used_ips.insert(spec.proxy_ips.begin(), spec.proxy_ips.end());

  ApplicationBundle app;
  app.app_id = spec.app_id;
  app.label = spec.label;
  EnrichmentBundle& e = app.enrichment;

  for (const auto& r : spec.sensitive_resources) e.permissions.push_back({r, "ReadWrite.All", true});
  auto normal = catalog_where(false);
  rng.shuffle(normal);
  const auto n_normal = 2 + rng.below(2);
  for (std::size_t i = 0; i < n_normal; ++i) e.permissions.push_back({std::string(normal[i]->name), "Read", false});

  std::vector<Event> events;
  const auto templates = benign_templates(e.permissions);
  std::vector<std::string> routine_ips = spec.benign_ips;
  std::string developer_ip;
  if (spec.developer_proxy) {
    developer_ip = fresh_ip(rng, 104, used_ips);
    routine_ips.push_back(developer_ip);
  }
  const bool dormant = spec.n_benign_records < 5;
  for (std::size_t i = 0; i < spec.n_benign_records; ++i) {
    const Template& t = dormant ? templates.front() : templates[rng.below(templates.size())];
    events.push_back({random_time(spec, rng), make_record(spec, t.type, t.operation, t.resource,
                                                          routine_ips[rng.below(routine_ips.size())], sig::kSuccess,
                                                          kSdkAgent)});
  }

  // Benign-suspicious patterns.
  std::vector<std::string> failing_ips;
  for (std::size_t i = 0; i < spec.failed_signin_ips; ++i) {
    failing_ips.push_back(fresh_ip(rng, 185, used_ips));
    const auto attempts = 1 + rng.below(5);
    const Permission& p = e.permissions.back();  // a normal resource
    for (std::size_t k = 0; k < attempts; ++k) {
      const auto code = rng.bernoulli(0.5) ? sig::kInvalidSecret : sig::kInvalidCredentials;
      events.push_back({random_time(spec, rng), make_record(spec, LogType::signin, std::string(sig::kSignin), p.resource,
                                                            failing_ips.back(), code, kToolAgent)});
    }
  }
  if (spec.expired_credential) {
    const auto n = 2 + rng.below(5);
    for (std::size_t k = 0; k < n; ++k) {
      events.push_back({random_time(spec, rng),
                        make_record(spec, LogType::signin, std::string(sig::kSignin), e.permissions.front().resource,
                                    spec.benign_ips[rng.below(spec.benign_ips.size())], sig::kExpiredSecret, kSdkAgent)});
    }
  }

  std::string attacker_ip;
  if (spec.label == Category::compromised) {
    attacker_ip = spec.proxy_ips.empty() ? fresh_ip(rng, 45, used_ips) : spec.proxy_ips.front();
    attack_events(spec, rng, attacker_ip, e.permissions, events);
  }

  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.ms < b.ms; });
  std::int64_t last = std::numeric_limits<std::int64_t>::min();
  for (auto& ev : events) {
    ev.ms = std::max(ev.ms, last + 1);
    last = ev.ms;
    ev.record.ts = Timestamp{ev.ms};
    app.records.push_back(std::move(ev.record));
  }
  app.signin_count = count_signins(app.records);

  // IP enrichment for every ip that appears.
  std::map<std::string, std::set<std::string>> touched;
  for (const auto& r : app.records) touched[r.ip].insert(r.resource);
  for (const auto& [ip, resources] : touched) {
    IpDetail d;
    d.ip = ip;
    d.city = pick_of(rng, kCities);
    const bool benign = std::find(spec.benign_ips.begin(), spec.benign_ips.end(), ip) != spec.benign_ips.end();
    const bool proxy = ip == developer_ip ||
                       std::find(spec.proxy_ips.begin(), spec.proxy_ips.end(), ip) != spec.proxy_ips.end();
    d.is_proxy = proxy;
    d.is_benign_known = benign || ip == developer_ip;
    d.isp = proxy ? pick_of(rng, kProxyIsps) : d.is_benign_known ? pick_of(rng, kBenignIsps) : pick_of(rng, kHostileIsps);
    for (const auto& r : resources) {
      d.resources_accessed.push_back({r, is_sensitive(r) ? Sensitivity::high : Sensitivity::normal});
    }
    e.ip_details.push_back(std::move(d));
  }

  constexpr std::int64_t kDay = 24LL * 3600 * 1000;
  const std::int64_t created = spec.start.millis - static_cast<std::int64_t>(30 + rng.below(300)) * kDay;
  e.credentials.push_back({"cred-" + spec.app_id + "-1", Timestamp{created}, std::nullopt,
                           Timestamp{created + 730 * kDay}});
  if (spec.expired_credential) {
    const std::int64_t old = spec.start.millis - 400 * kDay;
    e.credentials.push_back({"cred-" + spec.app_id + "-0", Timestamp{old}, Timestamp{old + 90 * kDay},
                             Timestamp{spec.start.millis - 10 * kDay}});
  }
  if (spec.label == Category::compromised && rng.bernoulli(0.4)) {
    e.alerts.push_back({"alert-" + spec.app_id, "Sign-in from an unfamiliar location", "medium"});
  } else if (spec.label == Category::benign_suspicious && rng.bernoulli(0.3)) {
    e.alerts.push_back({"alert-" + spec.app_id, "Repeated failed sign-in attempts", "low"});
  }
  return app;
}

ScenarioSpec random_spec(Category label, std::size_t index, std::uint64_t seed, const CorpusOptions& options) {
  Rng rng(derive_seed(seed, "spec", index));
  ScenarioSpec spec;
  char id[32];
  std::snprintf(id, sizeof id, "app-%010llx",
                static_cast<unsigned long long>(derive_seed(seed, "app-id", index) & 0xffffffffffULL));
  spec.app_id = id;
  spec.label = label;
  spec.seed = derive_seed(seed, "app", index);
  spec.start = Timestamp{1706745600000LL + static_cast<std::int64_t>(rng.below(30)) * 24 * 3600 * 1000};

  std::set<std::string> used;
  const auto n_benign_ips = 2 + rng.below(3);
  for (std::size_t i = 0; i < n_benign_ips; ++i) spec.benign_ips.push_back(fresh_ip(rng, 20, used));

  const auto sensitive = catalog_where(true);
  if (label == Category::compromised || rng.bernoulli(0.5)) {
    spec.sensitive_resources.push_back(std::string(sensitive[rng.below(sensitive.size())]->name));
    if (rng.bernoulli(0.3)) {
      const std::string extra(sensitive[rng.below(sensitive.size())]->name);
      if (extra != spec.sensitive_resources.front()) spec.sensitive_resources.push_back(extra);
    }
  }

  const bool dormant = label != Category::compromised && rng.bernoulli(options.dormant_fraction);
  if (dormant) {
    spec.n_benign_records = 1 + rng.below(4);
  } else {
    const double n = rng.pareto(options.pareto_xmin, options.pareto_alpha);
    spec.n_benign_records = static_cast<std::size_t>(std::min(n, static_cast<double>(options.max_benign_records)));
  }

  if (label == Category::compromised) {
    // Initial Access plus one stage that abuses the application's identity, then extras.
    spec.stages_enacted.push_back(Stage::initial_access);
    const Stage methods[] = {Stage::execution, Stage::persistence, Stage::privilege_escalation,
                             Stage::data_collection, Stage::defense_evasion};
    spec.stages_enacted.push_back(methods[rng.below(std::size(methods))]);
    std::vector<Stage> rest;
    for (Stage s : kAllStages) {
      if (std::find(spec.stages_enacted.begin(), spec.stages_enacted.end(), s) == spec.stages_enacted.end()) {
        rest.push_back(s);
      }
    }
    rng.shuffle(rest);
    const auto extra = 1 + rng.below(4);
    for (std::size_t i = 0; i < extra; ++i) spec.stages_enacted.push_back(rest[i]);
    std::sort(spec.stages_enacted.begin(), spec.stages_enacted.end());
    if (std::find(spec.stages_enacted.begin(), spec.stages_enacted.end(), Stage::defense_evasion) !=
        spec.stages_enacted.end()) {
      spec.proxy_ips.push_back(fresh_ip(rng, 198, used));
    }
    spec.n_malicious_records = 8 + rng.below(12);
  } else if (label == Category::benign_suspicious) {
    do {
      spec.failed_signin_ips = rng.bernoulli(0.6) ? 1 + rng.below(3) : 0;
      spec.expired_credential = rng.bernoulli(0.5);
      spec.developer_proxy = rng.bernoulli(0.3);
    } while (spec.failed_signin_ips == 0 && !spec.expired_credential && !spec.developer_proxy);
  }
  return spec;
}

GeneratedCorpus generate_corpus(std::size_t n_malicious, std::size_t n_benign_nonsuspicious,
                                std::size_t n_benign_suspicious, std::uint64_t seed, const CorpusOptions& options) {
  GeneratedCorpus corpus;
  std::size_t index = 0;
  auto add = [&](Category label, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) corpus.specs.push_back(random_spec(label, index++, seed, options));
  };
  add(Category::compromised, n_malicious);
  add(Category::benign_nonsuspicious, n_benign_nonsuspicious);
  add(Category::benign_suspicious, n_benign_suspicious);
  std::sort(corpus.specs.begin(), corpus.specs.end(),
            [](const ScenarioSpec& a, const ScenarioSpec& b) { return a.app_id < b.app_id; });
  for (const auto& spec : corpus.specs) {
    if (corpus.labels.count(spec.app_id) != 0) throw ConfigError("generated duplicate app id " + spec.app_id);
    corpus.apps.push_back(generate_app(spec));
    corpus.labels[spec.app_id] = spec.label;
  }
  return corpus;
}

void write_corpus(const std::string& root, const GeneratedCorpus& corpus) {
  const fs::path base(root);
  fs::create_directories(base / kAppsDir);
  write_labels((base / kLabelsFile).string(), corpus.labels);
  for (const auto& app : corpus.apps) {
    const fs::path dir = base / kAppsDir / app.app_id;
    fs::create_directories(dir);
    std::map<LogType, std::vector<LogRecord>> by_type;
    for (const auto& r : app.records) by_type[r.log_type].push_back(r);
    for (const auto& [type, records] : by_type) {
      write_log_file((dir / (std::string(to_string(type)) + ".jsonl")).string(), records);
    }
    write_enrichments((dir / "enrichment").string(), app.enrichment);
  }
}

}  // namespace logtriage
