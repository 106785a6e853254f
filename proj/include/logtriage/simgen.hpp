#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "logtriage/corpus.hpp"
#include "logtriage/rules.hpp"

namespace logtriage {

/// One synthetic application. Malicious events come from a single attacker ip
/// and follow the signatures in rules.hpp for each enacted stage.
struct ScenarioSpec {
  std::string app_id;
  Category label = Category::benign_nonsuspicious;
  std::vector<Stage> stages_enacted;
  std::size_t n_benign_records = 0;
  /// Attacker events in total; raised to the number the stage signatures need.
  std::size_t n_malicious_records = 0;
  /// Non-empty when the attacker hides behind a proxy (needed for Defense Evasion).
  std::vector<std::string> proxy_ips;
  std::vector<std::string> benign_ips;
  std::vector<std::string> sensitive_resources;
  /// Benign-suspicious patterns (label 1 only).
  std::size_t failed_signin_ips = 0;  // untrusted ips whose sign-ins all fail
  bool expired_credential = false;    // expired-secret errors from benign ips
  bool developer_proxy = false;       // a known-benign proxy used for routine work
  std::uint64_t seed = 0;
  Timestamp start{1706745600000};  // 2024-02-01T00:00:00Z
  std::int64_t span_ms = 14LL * 24 * 3600 * 1000;

  /// Throws ConfigError on label/stage inconsistencies.
  void validate() const;
};

/// Records (strictly increasing timestamps), enrichment and label for `spec`.
ApplicationBundle generate_app(const ScenarioSpec& spec);

struct CorpusOptions {
  double pareto_xmin = 40.0;
  double pareto_alpha = 0.7;
  std::size_t max_benign_records = 20000;
  double dormant_fraction = 0.1;  // benign apps with only a handful of sign-ins
};

/// Random spec for one application of the given label.
ScenarioSpec random_spec(Category label, std::size_t index, std::uint64_t seed, const CorpusOptions& options = {});

struct GeneratedCorpus {
  std::vector<ScenarioSpec> specs;
  std::vector<ApplicationBundle> apps;
  std::map<std::string, Category> labels;
};

/// Applications sorted by id; ids are hashes and do not reveal the label.
GeneratedCorpus generate_corpus(std::size_t n_malicious, std::size_t n_benign_nonsuspicious,
                                std::size_t n_benign_suspicious, std::uint64_t seed,
                                const CorpusOptions& options = {});

/// Writes <root>/labels.json and <root>/apps/<id>/{<log_type>.jsonl, enrichment/}.
void write_corpus(const std::string& root, const GeneratedCorpus& corpus);

}  // namespace logtriage
