#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "logtriage/corpus.hpp"
#include "logtriage/embedding.hpp"
#include "logtriage/evaluation.hpp"
#include "logtriage/profile.hpp"
#include "logtriage/reasoner.hpp"
#include "logtriage/reducer.hpp"
#include "logtriage/reviewer.hpp"
#include "logtriage/scoring.hpp"

namespace logtriage {

enum class EmbedderKind { hash, remote };

struct AnalysisConfig {
  std::size_t segment_cap = 40000;
  std::size_t target_k = 500;
  std::size_t runs = 5;
  std::vector<int> thresholds{3, 4, 5};
  std::size_t min_signin_count = 5;
  std::string criteria = "baseline";  // built-in name or file path
  BackendKind reasoner = BackendKind::mock;
  double noise = 0.0;
  std::size_t max_review_rounds = 2;
  std::uint64_t seed = 0;
  std::size_t parallelism = 1;
  std::size_t token_budget = 128000;
  std::string review_rules;  // optional rule file
  std::string audit_dir;     // prompts and responses are written here when set
  EmbedderKind embedder = EmbedderKind::hash;
  std::size_t embed_dim = HashEmbeddingProvider::kDefaultDim;
  DistanceMetric metric = DistanceMetric::euclidean;
  ForestParams forest;  // the seed is derived per segment

  /// Throws ConfigError.
  void validate() const;
};

/// Backend for one run; the argument is the run's derived seed.
using BackendFactory = std::function<std::shared_ptr<const ReasonerBackend>(std::uint64_t run_seed)>;

BackendFactory make_backend_factory(const AnalysisConfig& config);
std::shared_ptr<const EmbeddingProvider> make_embedder(const AnalysisConfig& config);

struct SegmentResult {
  std::size_t index = 0;
  std::size_t records = 0;
  std::size_t kept = 0;
  std::size_t target_k = 0;  // after any budget halving
  ReductionTrace trace;
};

struct RunResult {
  std::size_t run = 0;
  std::uint64_t seed = 0;
  PriorityScore score;                   // max over segments
  std::vector<PriorityScore> segments;   // per segment
  std::vector<TriageReport> reports;     // reviewed, per segment
  std::vector<Violation> violations;     // found before review, all segments
  std::size_t review_invocations = 0;
  bool review_unresolved = false;
};

struct AppResult {
  std::string app_id;
  bool ok = false;
  std::string error;
  std::size_t signin_count = 0;
  std::size_t record_count = 0;
  std::optional<Category> label;
  std::vector<int> votes;
  int score = 0;
  std::vector<Classification> classifications;  // one per threshold
  std::vector<SegmentResult> segments;
  std::vector<RunResult> runs;
  bool review_unresolved = false;
  std::size_t representative_run = 0;  // first run whose score equals the vote
};

struct AppContext {
  const ThreatActorProfile* profile = nullptr;
  const CriteriaSet* criteria = nullptr;
  const EmbeddingProvider* embedder = nullptr;
  BackendFactory backends;
  ReviewConfig review;
};

/// Segment, reduce, prompt, reason over every run, review, score and classify
/// one application. Throws on unrecoverable errors.
AppResult analyze_application(const ApplicationBundle& app, const AnalysisConfig& config, const AppContext& context);

struct PipelineResult {
  std::vector<AppResult> apps;  // sorted by app id
  std::optional<EvalSummary> summary;
  std::vector<std::string> notices;
  int exit_code = 0;  // 0 ok, 1 some apps failed
};

/// Runs every application of the corpus and writes, under out_dir:
/// classifications.jsonl, reports/<app>.md and .json, and metrics.json /
/// metrics.txt when a labels file exists. A failing app is reported and
/// skipped. Throws ConfigError for unusable configuration or inputs.
PipelineResult run_pipeline(const AnalysisConfig& config, const std::string& corpus_dir,
                            const std::string& profile_path, const std::string& out_dir,
                            const BackendFactory& backends = {});

inline constexpr std::string_view kClassificationsFile = "classifications.jsonl";
inline constexpr std::string_view kMetricsJsonFile = "metrics.json";
inline constexpr std::string_view kMetricsTextFile = "metrics.txt";

/// Reads a classifications file back as labeled apps (failed apps skipped).
std::vector<LabeledApp> load_classifications(const std::string& path, const std::map<std::string, Category>& labels);

/// Evaluates a classifications file against labels and writes the metrics files to out_dir.
EvalSummary evaluate_results(const std::string& classifications_path, const std::string& labels_path,
                             const std::vector<int>& thresholds, std::size_t min_signin_count,
                             const std::string& out_dir);

}  // namespace logtriage
