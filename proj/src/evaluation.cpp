#include "logtriage/evaluation.hpp"

#include <algorithm>
#include <cstdio>

#include <json.hpp>

namespace logtriage {

namespace {

double ratio(std::size_t num, std::size_t den, const std::string& what, std::vector<std::string>& warnings) {
  if (den == 0) {
    warnings.push_back(what + " is 0/0, reported as 0");
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

LabelMetrics label_metrics(const std::vector<Decision>& labels, const std::vector<Decision>& predictions,
                           Decision positive, std::vector<std::string>& warnings) {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool actual = labels[i] == positive;
    const bool predicted = predictions[i] == positive;
    tp += actual && predicted;
    fp += !actual && predicted;
    fn += actual && !predicted;
  }
  const std::string name(to_string(positive));
  LabelMetrics m;
  m.support = tp + fn;
  m.precision = ratio(tp, tp + fp, name + " precision", warnings);
  m.recall = ratio(tp, tp + fn, name + " recall", warnings);
  m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

}  // namespace

WeightedMetrics weighted_metrics(const std::vector<Decision>& labels, const std::vector<Decision>& predictions) {
  if (labels.size() != predictions.size()) throw ConfigError("weighted_metrics: labels and predictions differ in length");
  if (labels.empty()) throw ConfigError("weighted_metrics: no items");
  WeightedMetrics w;
  w.malicious = label_metrics(labels, predictions, Decision::malicious, w.warnings);
  w.benign = label_metrics(labels, predictions, Decision::benign, w.warnings);
  const double n = static_cast<double>(labels.size());
  const double wm = static_cast<double>(w.malicious.support) / n;
  const double wb = static_cast<double>(w.benign.support) / n;
  w.precision = wm * w.malicious.precision + wb * w.benign.precision;
  w.recall = wm * w.malicious.recall + wb * w.benign.recall;
  w.f1 = wm * w.malicious.f1 + wb * w.benign.f1;
  return w;
}

Decision ground_truth(Category c) noexcept {
  return c == Category::compromised ? Decision::malicious : Decision::benign;
}

double category_recall(const std::vector<LabeledApp>& apps, const std::vector<Decision>& predictions,
                       Category category) {
  if (apps.size() != predictions.size()) throw ConfigError("category_recall: apps and predictions differ in length");
  std::size_t total = 0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < apps.size(); ++i) {
    if (apps[i].category != category) continue;
    ++total;
    correct += predictions[i] == ground_truth(category);
  }
  if (total == 0) {
    throw ConfigError("category " + std::to_string(static_cast<int>(category)) + " does not occur in the data");
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

EvalSummary threshold_sweep(const std::vector<LabeledApp>& all, const std::vector<int>& thresholds,
                            std::size_t min_signin_count) {
  if (thresholds.empty()) throw ConfigError("threshold_sweep: no thresholds");
  std::vector<LabeledApp> apps;
  for (const auto& a : all) {
    if (a.signin_count >= min_signin_count) apps.push_back(a);
  }
  if (apps.empty()) {
    throw ConfigError("no application has at least " + std::to_string(min_signin_count) + " sign-in records");
  }

  EvalSummary summary;
  summary.min_signin_count = min_signin_count;
  summary.n_apps = apps.size();
  std::vector<Decision> labels;
  for (const auto& a : apps) labels.push_back(ground_truth(a.category));

  std::map<int, int> category_counts;
  for (int t : thresholds) {
    ThresholdMetrics tm;
    tm.threshold = t;
    std::vector<Decision> predictions;
    for (const auto& a : apps) predictions.push_back(a.score >= t ? Decision::malicious : Decision::benign);
    tm.metrics = weighted_metrics(labels, predictions);
    for (const auto& w : tm.metrics.warnings) summary.warnings.push_back("threshold " + std::to_string(t) + ": " + w);
    for (Category c : {Category::benign_nonsuspicious, Category::benign_suspicious, Category::compromised}) {
      const bool present = std::any_of(apps.begin(), apps.end(), [&](const LabeledApp& a) { return a.category == c; });
      if (!present) continue;
      const double r = category_recall(apps, predictions, c);
      tm.category_recall[static_cast<int>(c)] = r;
      summary.category_recall[static_cast<int>(c)] += r;
      ++category_counts[static_cast<int>(c)];
    }
    summary.precision += tm.metrics.precision;
    summary.recall += tm.metrics.recall;
    summary.f1 += tm.metrics.f1;
    summary.per_threshold.push_back(std::move(tm));
  }
  const double k = static_cast<double>(thresholds.size());
  summary.precision /= k;
  summary.recall /= k;
  summary.f1 /= k;
  for (auto& [code, r] : summary.category_recall) r /= category_counts[code];
  return summary;
}

namespace {

nlohmann::ordered_json label_json(const LabelMetrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
}

nlohmann::ordered_json recall_json(const std::map<int, double>& recall) {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (const auto& [code, r] : recall) out[std::to_string(code)] = r;
  return out;
}

}  // namespace

std::string summary_to_json(const EvalSummary& s) {
  nlohmann::ordered_json out;
  out["n_apps"] = s.n_apps;
  out["filter"] = {{"min_signin_count", s.min_signin_count}};
  out["averaged"] = {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
  out["category_recall"] = recall_json(s.category_recall);
  auto& per = out["per_threshold"] = nlohmann::ordered_json::array();
  for (const auto& t : s.per_threshold) {
    per.push_back({{"threshold", t.threshold},
                   {"precision", t.metrics.precision},
                   {"recall", t.metrics.recall},
                   {"f1", t.metrics.f1},
                   {"per_label", {{"malicious", label_json(t.metrics.malicious)}, {"benign", label_json(t.metrics.benign)}}},
                   {"category_recall", recall_json(t.category_recall)}});
  }
  out["warnings"] = s.warnings;
  return out.dump(2) + "\n";
}

std::string summary_to_text(const EvalSummary& s) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "apps: %zu (sign-ins >= %zu)\n\n", s.n_apps, s.min_signin_count);
  out += buf;
  std::snprintf(buf, sizeof buf, "%-10s %9s %9s %9s %9s %9s %9s\n", "threshold", "precision", "recall", "f1",
                "recall_0", "recall_1", "recall_2");
  out += buf;
  auto recall_cell = [](const std::map<int, double>& m, int code) {
    char cell[16];
    const auto it = m.find(code);
    if (it == m.end()) return std::string("-");
    std::snprintf(cell, sizeof cell, "%.3f", it->second);
    return std::string(cell);
  };
  for (const auto& t : s.per_threshold) {
    std::snprintf(buf, sizeof buf, "%-10d %9.3f %9.3f %9.3f %9s %9s %9s\n", t.threshold, t.metrics.precision,
                  t.metrics.recall, t.metrics.f1, recall_cell(t.category_recall, 0).c_str(),
                  recall_cell(t.category_recall, 1).c_str(), recall_cell(t.category_recall, 2).c_str());
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "%-10s %9.3f %9.3f %9.3f %9s %9s %9s\n", "average", s.precision, s.recall, s.f1,
                recall_cell(s.category_recall, 0).c_str(), recall_cell(s.category_recall, 1).c_str(),
                recall_cell(s.category_recall, 2).c_str());
  out += buf;
  for (const auto& w : s.warnings) out += "warning: " + w + "\n";
  return out;
}

}  // namespace logtriage
