#include "logtriage/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <mutex>
#include <thread>

#include <json.hpp>

namespace logtriage {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

void AnalysisConfig::validate() const {
  if (segment_cap == 0) throw ConfigError("segment cap must be >= 1");
  if (target_k == 0) throw ConfigError("target k must be >= 1");
  if (runs == 0) throw ConfigError("runs must be >= 1");
  if (thresholds.empty()) throw ConfigError("at least one threshold is required");
  for (int t : thresholds) {
    if (t < 0) throw ConfigError("thresholds must be >= 0");
  }
  if (!(noise >= 0.0 && noise < 1.0)) throw ConfigError("noise must be in [0, 1)");
  if (parallelism == 0) throw ConfigError("parallelism must be >= 1");
  if (token_budget == 0) throw ConfigError("token budget must be >= 1");
  if (embed_dim < 2) throw ConfigError("embedding dimension must be >= 2");
  forest.validate();
}

namespace {

// Writes every prompt/response pair of one backend to a directory.
class AuditingBackend final : public ReasonerBackend {
 public:
  AuditingBackend(std::shared_ptr<const ReasonerBackend> inner, std::string dir)
      : inner_(std::move(inner)), dir_(std::move(dir)) {}

  std::string name() const override { return inner_->name(); }
  BackendKind kind() const override { return inner_->kind(); }
  std::string complete(const PromptBundle& prompts) const override {
    const std::size_t n = counter_.fetch_add(1);
    const std::string stem = (fs::path(dir_) / ("call-" + std::to_string(n))).string();
    write_file(stem + ".prompt.md", "# System\n" + prompts.system_text + "\n\n" + prompts.user_text);
    std::string response = inner_->complete(prompts);
    write_file(stem + ".response.md", response);
    return response;
  }

 private:
  std::shared_ptr<const ReasonerBackend> inner_;
  std::string dir_;
  mutable std::atomic<std::size_t> counter_{0};
};

}  // namespace

BackendFactory make_backend_factory(const AnalysisConfig& config) {
  if (config.reasoner == BackendKind::mock) {
    const double noise = config.noise;
    return [noise](std::uint64_t seed) { return std::make_shared<const MockReasoner>(MockOptions{noise, seed}); };
  }
  auto remote = std::make_shared<const RemoteReasoner>(RemoteReasonerOptions::from_env());
  return [remote](std::uint64_t) { return remote; };
}

std::shared_ptr<const EmbeddingProvider> make_embedder(const AnalysisConfig& config) {
  if (config.embedder == EmbedderKind::remote) {
    return std::make_shared<const RemoteEmbeddingProvider>(RemoteEmbeddingOptions::from_env());
  }
  return std::make_shared<const HashEmbeddingProvider>(config.embed_dim);
}

namespace {

struct PreparedSegment {
  SegmentResult info;
  ReducedSegment reduced;
  std::vector<LogRecord> kept;
  PromptBundle prompts;
};

PreparedSegment prepare_segment(const ApplicationBundle& app, const Segment& segment, const AnalysisConfig& config,
                                const AppContext& ctx) {
  ForestParams forest = config.forest;
  forest.seed = derive_seed(config.seed, "forest/" + app.app_id, segment.index);
  std::size_t k = config.target_k;
  for (;;) {
    PreparedSegment p;
    p.reduced = reduce_segment(segment, *ctx.embedder, k, forest, config.metric);
    p.kept = p.reduced.kept_records();
    try {
      p.prompts = build_prompts(*ctx.profile, *ctx.criteria, p.reduced, app.enrichment, {config.token_budget});
    } catch (const TokenBudgetExceeded&) {
      if (k == 1) throw;
      k = std::max<std::size_t>(1, k / 2);
      continue;
    }
    p.info.index = segment.index;
    p.info.records = segment.records.size();
    p.info.kept = p.kept.size();
    p.info.target_k = k;
    p.info.trace = p.reduced.trace;
    return p;
  }
}

TriageReport reason_once(const ReasonerBackend& backend, const PromptBundle& prompts, const CriteriaSet& set) {
  const ReportParseOptions lenient{true};
  try {
    return parse_report(invoke(backend, prompts), set, lenient);
  } catch (const ReportParseError&) {
    // One re-invocation before giving up.
    return parse_report(invoke(backend, prompts), set, lenient);
  }
}

}  // namespace

AppResult analyze_application(const ApplicationBundle& app, const AnalysisConfig& config, const AppContext& ctx) {
  AppResult result;
  result.app_id = app.app_id;
  result.signin_count = app.signin_count;
  result.record_count = app.records.size();
  result.label = app.label;
  if (app.records.empty()) throw ConfigError("application has no log records");

  const auto segments = segment_application(app.records, config.segment_cap);
  std::vector<PreparedSegment> prepared;
  for (const auto& s : segments) {
    prepared.push_back(prepare_segment(app, s, config, ctx));
    result.segments.push_back(prepared.back().info);
  }

  const CriteriaSet& set = *ctx.criteria;
  for (std::size_t r = 0; r < config.runs; ++r) {
    RunResult run;
    run.run = r;
    run.seed = derive_seed(config.seed, app.app_id, r);
    std::shared_ptr<const ReasonerBackend> backend = ctx.backends(run.seed);
    if (!config.audit_dir.empty()) {
      const std::string dir = (fs::path(config.audit_dir) / app.app_id / ("run-" + std::to_string(r))).string();
      backend = std::make_shared<const AuditingBackend>(backend, dir);
    }
    for (const auto& p : prepared) {
      const TriageReport report = reason_once(*backend, p.prompts, set);
      const ReviewEvidence evidence{&app.enrichment, &p.kept};
      ReviewOutcome outcome = review(report, set, *backend, evidence, ctx.review);
      run.violations.insert(run.violations.end(), outcome.violations.begin(), outcome.violations.end());
      run.review_invocations += outcome.review_invocations;
      run.review_unresolved = run.review_unresolved || outcome.unresolved;

      TriageReport final_report = outcome.unresolved ? report : outcome.report;
      final_report.verdicts = outcome.corrected_verdicts;
      final_report.run_id = r;
      final_report.segment_index = p.info.index;
      run.segments.push_back(score_verdicts(final_report.verdicts, set, p.info.index));
      run.reports.push_back(std::move(final_report));
    }
    run.score = aggregate_segments(run.segments);
    result.votes.push_back(run.score.value);
    result.review_unresolved = result.review_unresolved || run.review_unresolved;
    result.runs.push_back(std::move(run));
  }

  result.score = majority_vote(result.votes);
  for (std::size_t r = 0; r < result.runs.size(); ++r) {
    if (result.runs[r].score.value == result.score) {
      result.representative_run = r;
      break;
    }
  }
  for (int t : config.thresholds) result.classifications.push_back(classify(app.app_id, result.votes, t));
  result.ok = true;
  return result;
}

namespace {

std::string_view method_name(DistanceMetric m) {
  return m == DistanceMetric::cosine ? "cosine" : "euclidean";
}

ordered_json classification_json(const AppResult& a) {
  ordered_json j;
  j["app_id"] = a.app_id;
  j["status"] = a.ok ? "ok" : "failed";
  if (!a.ok) {
    j["error"] = a.error;
    return j;
  }
  j["score"] = a.score;
  j["votes"] = a.votes;
  ordered_json decisions = ordered_json::object();
  for (const auto& c : a.classifications) decisions[std::to_string(c.threshold)] = to_string(c.decision);
  j["decisions"] = decisions;
  j["signin_count"] = a.signin_count;
  j["records"] = a.record_count;
  j["segments"] = a.segments.size();
  j["review_unresolved"] = a.review_unresolved;
  return j;
}

ordered_json sidecar_json(const AppResult& a, const CriteriaSet& set) {
  const RunResult& run = a.runs[a.representative_run];
  const std::size_t seg = run.score.segment_index;
  const TriageReport& report = run.reports[seg];

  ordered_json j;
  j["app_id"] = a.app_id;
  j["criteria"] = set.label();
  j["score"] = a.score;
  j["votes"] = a.votes;
  j["representative"] = {{"run", a.representative_run}, {"segment", seg}};
  ordered_json verdicts = ordered_json::array();
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& term = run.segments[seg].breakdown[i];
    verdicts.push_back({{"item", i + 1},
                        {"criterion_id", term.criterion_id},
                        {"verdict", term.verdict},
                        {"delta_applied", term.delta_applied}});
  }
  j["verdicts"] = verdicts;
  j["raw_score"] = run.segments[seg].raw;
  ordered_json acts = ordered_json::array();
  for (const auto& s : report.suspicious_activities) {
    acts.push_back({{"stage", s.stage}, {"evidence", s.evidence}, {"entities", s.entities}, {"dates", s.dates}});
  }
  j["suspicious_activities"] = acts;
  ordered_json segs = ordered_json::array();
  for (const auto& s : a.segments) {
    ordered_json flagged = s.trace.flagged;
    segs.push_back({{"index", s.index},
                    {"records", s.records},
                    {"kept", s.kept},
                    {"subsample_applied", s.trace.subsample_applied},
                    {"target_k", s.target_k},
                    {"metric", method_name(s.trace.metric)},
                    {"forest",
                     {{"n_trees", s.trace.forest.n_trees},
                      {"subsample_size", s.trace.forest.subsample_size},
                      {"contamination", s.trace.forest.contamination},
                      {"seed", s.trace.forest.seed}}},
                    {"maxmin_selected", s.trace.maxmin_selected},
                    {"anomalies_added", flagged}});
  }
  j["segments"] = segs;
  ordered_json runs = ordered_json::array();
  for (const auto& r : a.runs) {
    ordered_json seg_scores = ordered_json::array();
    for (const auto& s : r.segments) seg_scores.push_back(s.value);
    ordered_json violations = ordered_json::array();
    for (const auto& v : r.violations) violations.push_back({{"rule", v.rule_id}, {"detail", v.detail}});
    runs.push_back({{"run", r.run},
                    {"score", r.score.value},
                    {"segment_scores", seg_scores},
                    {"review_invocations", r.review_invocations},
                    {"review_unresolved", r.review_unresolved},
                    {"violations", violations}});
  }
  j["runs"] = runs;
  return j;
}

std::string report_markdown(const AppResult& a, const CriteriaSet& set) {
  const RunResult& run = a.runs[a.representative_run];
  const TriageReport& report = run.reports[run.score.segment_index];
  std::string votes;
  for (int v : a.votes) votes += (votes.empty() ? "" : ", ") + std::to_string(v);
  std::string out = "Application: " + a.app_id + "\nPriority score: " + std::to_string(a.score) + " (votes: " + votes +
                    ")\n";
  if (a.review_unresolved) out += "Review: unresolved in at least one run; manual attention needed.\n";
  out += "\n" + render_report(report, set);
  return out;
}

}  // namespace

PipelineResult run_pipeline(const AnalysisConfig& config, const std::string& corpus_dir,
                            const std::string& profile_path, const std::string& out_dir,
                            const BackendFactory& backends) {
  config.validate();
  ThreatActorProfile profile;
  try {
    profile = load_profile(profile_path);
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  CriteriaSet set = [&] {
    try {
      return resolve_criteria(config.criteria);
    } catch (const ParseError& e) {
      throw ConfigError(e.what());
    } catch (const IoError& e) {
      throw ConfigError(e.what());
    }
  }();
  AppContext ctx;
  ctx.profile = &profile;
  ctx.criteria = &set;
  ctx.review.max_rounds = config.max_review_rounds;
  if (!config.review_rules.empty()) {
    try {
      ctx.review.rules = load_review_rules(config.review_rules);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
  const auto embedder = make_embedder(config);
  ctx.embedder = embedder.get();
  ctx.backends = backends ? backends : make_backend_factory(config);

  std::vector<std::string> ids;
  try {
    ids = list_applications(corpus_dir);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }

  PipelineResult result;
  const fs::path labels_path = fs::path(corpus_dir) / kLabelsFile;
  std::map<std::string, Category> labels;
  const bool labeled = fs::exists(labels_path);
  if (labeled) {
    try {
      labels = load_labels(labels_path.string());
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }

  result.apps.resize(ids.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < ids.size(); i = next.fetch_add(1)) {
      AppResult& slot = result.apps[i];
      try {
        ApplicationBundle app = load_application(corpus_dir, ids[i]);
        if (auto it = labels.find(ids[i]); it != labels.end()) app.label = it->second;
        slot = analyze_application(app, config, ctx);
      } catch (const std::exception& e) {
        slot = AppResult{};
        slot.app_id = ids[i];
        slot.ok = false;
        slot.error = e.what();
      }
    }
  };
  const std::size_t n_threads = std::min(config.parallelism, std::max<std::size_t>(1, ids.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::string classifications;
  for (const auto& a : result.apps) {
    classifications += classification_json(a).dump() + "\n";
    if (!a.ok) {
      result.notices.push_back(a.app_id + ": failed: " + a.error);
      result.exit_code = 1;
      continue;
    }
    const fs::path reports = fs::path(out_dir) / "reports";
    write_file((reports / (a.app_id + ".md")).string(), report_markdown(a, set));
    write_file((reports / (a.app_id + ".json")).string(), sidecar_json(a, set).dump(2) + "\n");
  }
  write_file((fs::path(out_dir) / kClassificationsFile).string(), classifications);

  if (!labeled) {
    result.notices.push_back("no labels file in the corpus; evaluation skipped");
    return result;
  }
  std::vector<LabeledApp> scored;
  for (const auto& a : result.apps) {
    if (!a.ok) continue;
    const auto it = labels.find(a.app_id);
    if (it == labels.end()) {
      result.notices.push_back(a.app_id + ": no label; left out of evaluation");
      continue;
    }
    scored.push_back({a.app_id, it->second, a.score, a.signin_count});
  }
  try {
    result.summary = threshold_sweep(scored, config.thresholds, config.min_signin_count);
  } catch (const ConfigError& e) {
    result.notices.push_back(std::string("evaluation skipped: ") + e.what());
    return result;
  }
  write_file((fs::path(out_dir) / kMetricsJsonFile).string(), summary_to_json(*result.summary));
  write_file((fs::path(out_dir) / kMetricsTextFile).string(), summary_to_text(*result.summary));
  for (const auto& w : result.summary->warnings) result.notices.push_back("warning: " + w);
  return result;
}

std::vector<LabeledApp> load_classifications(const std::string& path, const std::map<std::string, Category>& labels) {
  std::vector<LabeledApp> out;
  std::size_t line_number = 0;
  for (const auto& line : split(read_file(path), '\n')) {
    ++line_number;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      if (j.at("status").get<std::string>() != "ok") continue;
      const std::string id = j.at("app_id").get<std::string>();
      const auto it = labels.find(id);
      if (it == labels.end()) continue;
      out.push_back({id, it->second, j.at("score").get<int>(), j.at("signin_count").get<std::size_t>()});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ": " + e.what(), line_number);
    }
  }
  return out;
}

EvalSummary evaluate_results(const std::string& classifications_path, const std::string& labels_path,
                             const std::vector<int>& thresholds, std::size_t min_signin_count,
                             const std::string& out_dir) {
  const auto labels = load_labels(labels_path);
  const auto apps = load_classifications(classifications_path, labels);
  EvalSummary summary = threshold_sweep(apps, thresholds, min_signin_count);
  write_file((fs::path(out_dir) / kMetricsJsonFile).string(), summary_to_json(summary));
  write_file((fs::path(out_dir) / kMetricsTextFile).string(), summary_to_text(summary));
  return summary;
}

}  // namespace logtriage
