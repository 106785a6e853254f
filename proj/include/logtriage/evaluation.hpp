#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "logtriage/corpus.hpp"
#include "logtriage/scoring.hpp"

namespace logtriage {

struct LabelMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct WeightedMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  LabelMetrics malicious;
  LabelMetrics benign;
  std::vector<std::string> warnings;  // 0/0 cases, reported as 0
};

/// Per-label precision, recall and F1 (harmonic mean of that label's p and r),
/// each combined across labels with weights equal to label support.
WeightedMetrics weighted_metrics(const std::vector<Decision>& labels, const std::vector<Decision>& predictions);

Decision ground_truth(Category c) noexcept;

struct LabeledApp {
  std::string app_id;
  Category category = Category::benign_nonsuspicious;
  int score = 0;
  std::size_t signin_count = 0;
};

/// Recall within one category: codes 0 and 1 count as correct when predicted
/// benign, code 2 when predicted malicious. Throws ConfigError when the
/// category does not occur.
double category_recall(const std::vector<LabeledApp>& apps, const std::vector<Decision>& predictions,
                       Category category);

struct ThresholdMetrics {
  int threshold = 0;
  WeightedMetrics metrics;
  std::map<int, double> category_recall;  // Table-1 code -> recall, codes present only
};

struct EvalSummary {
  std::vector<ThresholdMetrics> per_threshold;
  double precision = 0.0;  // means over thresholds
  double recall = 0.0;
  double f1 = 0.0;
  std::map<int, double> category_recall;  // mean over thresholds
  std::size_t min_signin_count = 0;
  std::size_t n_apps = 0;
  std::vector<std::string> warnings;
};

/// Keeps apps with signin_count >= min_signin_count, classifies each at every
/// threshold and averages the weighted metrics across thresholds.
EvalSummary threshold_sweep(const std::vector<LabeledApp>& apps, const std::vector<int>& thresholds,
                            std::size_t min_signin_count);

std::string summary_to_json(const EvalSummary& summary);
/// Fixed-width table: one row per threshold plus the average.
std::string summary_to_text(const EvalSummary& summary);

}  // namespace logtriage
