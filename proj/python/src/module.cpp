#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "logtriage/pipeline.hpp"
#include "logtriage/simgen.hpp"

namespace py = pybind11;
using namespace logtriage;

namespace {

CriteriaSet criteria_by_name(const std::string& name) { return resolve_criteria(name); }

py::dict score_report(const std::string& text, const std::string& criteria) {
  const CriteriaSet set = criteria_by_name(criteria);
  const TriageReport report = parse_report(text, set);
  const PriorityScore score = score_verdicts(report.verdicts, set);
  py::dict verdicts;
  for (const auto& v : report.verdicts) verdicts[py::str(v.criterion_id)] = v.value;
  py::dict out;
  out["score"] = score.value;
  out["raw"] = score.raw;
  out["verdicts"] = verdicts;
  out["behavior"] = report.behavior_summary;
  return out;
}


py::dict weighted(const std::vector<int>& labels, const std::vector<int>& predictions) {
  auto convert = [](const std::vector<int>& xs) {
    std::vector<Decision> out;
    for (int x : xs) {
      if (x != 0 && x != 1) throw ConfigError("decisions are 0 (benign) or 1 (malicious)");
      out.push_back(x == 1 ? Decision::malicious : Decision::benign);
    }
    return out;
  };
  const WeightedMetrics w = weighted_metrics(convert(labels), convert(predictions));
  py::dict out;
  out["precision"] = w.precision;
  out["recall"] = w.recall;
  out["f1"] = w.f1;
  return out;
}

py::dict analyze(const std::string& logs, const std::string& profile, const std::string& out_dir, py::kwargs options) {
  AnalysisConfig c;
  for (const auto& [key, value] : options) {
    const std::string k = py::cast<std::string>(key);
    if (k == "runs") c.runs = py::cast<std::size_t>(value);
    else if (k == "criteria") c.criteria = py::cast<std::string>(value);
    else if (k == "noise") c.noise = py::cast<double>(value);
    else if (k == "seed") c.seed = py::cast<std::uint64_t>(value);
    else if (k == "thresholds") c.thresholds = py::cast<std::vector<int>>(value);
    else if (k == "segment_cap") c.segment_cap = py::cast<std::size_t>(value);
    else if (k == "target_k") c.target_k = py::cast<std::size_t>(value);
    else if (k == "min_signin_count") c.min_signin_count = py::cast<std::size_t>(value);
    else if (k == "parallelism") c.parallelism = py::cast<std::size_t>(value);
    else if (k == "max_review_rounds") c.max_review_rounds = py::cast<std::size_t>(value);
    else throw ConfigError("unknown option '" + k + "'");
  }
  PipelineResult result;
  {
    py::gil_scoped_release release;
    result = run_pipeline(c, logs, profile, out_dir);
  }
  py::dict scores;
  for (const auto& a : result.apps) {
    if (a.ok) scores[py::str(a.app_id)] = a.score;
  }
  py::dict out;
  out["exit_code"] = result.exit_code;
  out["scores"] = scores;
  out["notices"] = result.notices;
  if (result.summary) {
    out["f1"] = result.summary->f1;
    out["precision"] = result.summary->precision;
    out["recall"] = result.summary->recall;
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Log triage core bindings";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  m.def("generate_corpus",
        [](const std::string& out, std::size_t malicious, std::size_t benign, std::size_t suspicious,
           std::uint64_t seed, std::size_t max_records) {
          CorpusOptions options;
          options.max_benign_records = max_records;
          const auto corpus = generate_corpus(malicious, benign, suspicious, seed, options);
          write_corpus(out, corpus);
          std::map<std::string, int> labels;
          for (const auto& [id, c] : corpus.labels) labels[id] = static_cast<int>(c);
          return labels;
        },
        py::arg("out"), py::arg("malicious") = 32, py::arg("benign") = 16, py::arg("suspicious") = 45,
        py::arg("seed") = 7, py::arg("max_records") = 20000,
        "Write a labeled synthetic corpus and return {app_id: category code}.");

  m.def("analyze", &analyze, py::arg("logs"), py::arg("profile"), py::arg("out"),
        "Run the triage pipeline over a corpus directory.");

  m.def("score_report", &score_report, py::arg("text"), py::arg("criteria") = "baseline",
        "Parse a triage report and return its verdicts and priority score.");

  m.def("max_score", [](const std::string& criteria) { return criteria_by_name(criteria).max_score(); },
        py::arg("criteria") = "baseline");

  m.def("subsample_maxmin",
        [](const std::vector<std::vector<double>>& rows, std::size_t k) {
          return subsample_maxmin(EmbeddingMatrix::from_rows(rows), k);
        },
        py::arg("rows"), py::arg("k"));

  m.def("anomaly_scores",
        [](const std::vector<std::vector<double>>& rows, std::size_t n_trees, std::uint64_t seed) {
          ForestParams p;
          p.n_trees = n_trees;
          p.seed = seed;
          return anomaly_scores(EmbeddingMatrix::from_rows(rows), p);
        },
        py::arg("rows"), py::arg("n_trees") = 100, py::arg("seed") = 0);

  m.def("majority_vote", &majority_vote, py::arg("scores"));
  m.def("weighted_metrics", &weighted, py::arg("labels"), py::arg("predictions"),
        "Support-weighted precision, recall and F1; 1 = malicious, 0 = benign.");
}
