#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "logtriage/pipeline.hpp"
#include "logtriage/simgen.hpp"

namespace fs = std::filesystem;
using namespace logtriage;

namespace {

constexpr int kOk = 0;
constexpr int kPartial = 1;
constexpr int kConfig = 2;

void print_notices(const std::vector<std::string>& notices) {
  for (const auto& n : notices) std::cerr << n << "\n";
}

int cmd_generate(const fs::path& out, std::size_t malicious, std::size_t benign, std::size_t suspicious,
                 std::uint64_t seed, const CorpusOptions& options) {
  const auto corpus = generate_corpus(malicious, benign, suspicious, seed, options);
  write_corpus(out.string(), corpus);
  std::size_t records = 0;
  for (const auto& a : corpus.apps) records += a.records.size();
  std::cout << "wrote " << corpus.apps.size() << " applications (" << records << " records) to " << out.string()
            << "\n";
  return kOk;
}

int cmd_analyze(const AnalysisConfig& config, const std::string& logs, const std::string& profile,
                const std::string& out) {
  const PipelineResult result = run_pipeline(config, logs, profile, out);
  std::size_t failed = 0;
  for (const auto& a : result.apps) failed += !a.ok;
  std::cout << "analyzed " << result.apps.size() - failed << " of " << result.apps.size() << " applications\n";
  if (result.summary) std::cout << "\n" << summary_to_text(*result.summary);
  print_notices(result.notices);
  return result.exit_code == 0 ? kOk : kPartial;
}

int cmd_evaluate(const std::string& results, const std::string& labels, const std::vector<int>& thresholds,
                 std::size_t min_logs, const std::string& out) {
  fs::path file(results);
  if (fs::is_directory(file)) file /= kClassificationsFile;
  const std::string target = out.empty() ? file.parent_path().string() : out;
  const EvalSummary summary = evaluate_results(file.string(), labels, thresholds, min_logs, target);
  std::cout << summary_to_text(summary);
  return kOk;
}

int cmd_report(const std::string& out, const std::string& app) {
  if (!app.empty()) {
    std::cout << read_file((fs::path(out) / "reports" / (app + ".md")).string());
    return kOk;
  }
  int status = kOk;
  for (const auto& line : split(read_file((fs::path(out) / kClassificationsFile).string()), '\n')) {
    if (trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line);
    std::cout << j.at("app_id").get<std::string>() << "  ";
    if (j.at("status") != "ok") {
      std::cout << "FAILED  " << j.value("error", "") << "\n";
      status = kPartial;
      continue;
    }
    std::cout << "score " << j.at("score").get<int>() << "  ";
    for (const auto& [t, d] : j.at("decisions").items()) std::cout << t << ":" << d.get<std::string>() << " ";
    if (j.value("review_unresolved", false)) std::cout << " (review unresolved)";
    std::cout << "\n";
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Threat-actor-informed triage of application security logs"};
  app.set_config("--config", "", "TOML/INI file with option values; command-line flags take precedence");
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write a labeled synthetic corpus");
  std::string gen_out;
  std::size_t n_mal = 32;
  std::size_t n_ben = 16;
  std::size_t n_sus = 45;
  std::uint64_t gen_seed = 7;
  CorpusOptions corpus_options;
  gen->add_option("--out", gen_out, "Corpus directory")->required();
  gen->add_option("--malicious", n_mal, "Compromised applications")->capture_default_str();
  gen->add_option("--benign", n_ben, "Benign applications without suspicious behavior")->capture_default_str();
  gen->add_option("--suspicious", n_sus, "Benign applications with suspicious behavior")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Master seed")->capture_default_str();
  gen->add_option("--max-records", corpus_options.max_benign_records, "Cap on benign records per application")
      ->capture_default_str();

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Triage every application of a corpus");
  AnalysisConfig config;
  std::string logs;
  std::string profile;
  std::string out = "out";
  std::string reasoner = "mock";
  std::string embedder = "hash";
  analyze->add_option("--logs", logs, "Corpus directory")->required();
  analyze->add_option("--profile", profile, "Threat actor profile (YAML)")->required();
  analyze->add_option("--criteria", config.criteria, "baseline, focused, or a criteria file")->capture_default_str();
  analyze->add_option("--runs", config.runs, "Independent runs per application")->capture_default_str();
  analyze->add_option("--segment-cap", config.segment_cap, "Records per analysis segment")->capture_default_str();
  analyze->add_option("--target-k", config.target_k, "Records kept by max-min subsampling")->capture_default_str();
  analyze->add_option("--min-logs", config.min_signin_count, "Minimum sign-in count for evaluation")
      ->capture_default_str();
  analyze->add_option("--thresholds", config.thresholds, "Priority score thresholds")->delimiter(',');
  analyze->add_option("--reasoner", reasoner, "Reasoner backend")
      ->check(CLI::IsMember({"mock", "remote"}))
      ->capture_default_str();
  analyze->add_option("--noise", config.noise, "Mock verdict flip probability")->capture_default_str();
  analyze->add_option("--seed", config.seed, "Master seed")->capture_default_str();
  analyze->add_option("--parallelism", config.parallelism, "Applications analyzed concurrently")
      ->capture_default_str();
  analyze->add_option("--audit", config.audit_dir, "Directory for prompt/response pairs");
  analyze->add_option("--out", out, "Output directory")->capture_default_str();
  analyze->add_option("--review-rules", config.review_rules, "Extra review rules (YAML)");
  analyze->add_option("--max-review-rounds", config.max_review_rounds, "Maximum review rounds")->capture_default_str();
  analyze->add_option("--token-budget", config.token_budget, "Prompt token budget")->capture_default_str();
  analyze->add_option("--embedder", embedder, "Embedding provider")
      ->check(CLI::IsMember({"hash", "remote"}))
      ->capture_default_str();
  analyze->add_option("--embed-dim", config.embed_dim, "Hash embedding dimension")->capture_default_str();
  analyze->add_option("--trees", config.forest.n_trees, "Isolation forest trees")->capture_default_str();
  analyze->add_option("--contamination", config.forest.contamination, "Fraction of records flagged as anomalies")
      ->capture_default_str();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Compute metrics from a classifications file");
  std::string results;
  std::string labels;
  std::string eval_out;
  std::vector<int> eval_thresholds{3, 4, 5};
  std::size_t eval_min_logs = 5;
  evaluate->add_option("--results", results, "classifications.jsonl or the analyze output directory")->required();
  evaluate->add_option("--labels", labels, "labels.json")->required();
  evaluate->add_option("--thresholds", eval_thresholds, "Priority score thresholds")->delimiter(',');
  evaluate->add_option("--min-logs", eval_min_logs, "Minimum sign-in count")->capture_default_str();
  evaluate->add_option("--out", eval_out, "Directory for metrics files (default: next to the results)");

  // report
  auto* report = app.add_subcommand("report", "Print analysis results");
  std::string report_out = "out";
  std::string report_app;
  report->add_option("--out", report_out, "Output directory of analyze")->capture_default_str();
  report->add_option("--app", report_app, "Print the full report of one application");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*gen) return cmd_generate(gen_out, n_mal, n_ben, n_sus, gen_seed, corpus_options);
    if (*analyze) {
      config.reasoner = reasoner == "remote" ? BackendKind::remote : BackendKind::mock;
      config.embedder = embedder == "remote" ? EmbedderKind::remote : EmbedderKind::hash;
      return cmd_analyze(config, logs, profile, out);
    }
    if (*evaluate) return cmd_evaluate(results, labels, eval_thresholds, eval_min_logs, eval_out);
    if (*report) return cmd_report(report_out, report_app);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfig;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kPartial;
  }
  return kOk;
}
