#pragma once

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "logtriage/common.hpp"
#include "logtriage/embedding.hpp"
#include "logtriage/scoring.hpp"

namespace logtriage::testing {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(LOGTRIAGE_FIXTURES) / name;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("logtriage-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

inline double euclid(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Recomputes every distance from scratch at each step.
inline std::vector<std::size_t> maxmin_oracle(const std::vector<std::vector<double>>& pts, std::size_t k) {
  const std::size_t n = pts.size();
  const std::size_t dim = pts[0].size();
  std::vector<double> centroid(dim, 0.0);
  for (const auto& p : pts) {
    for (std::size_t j = 0; j < dim; ++j) centroid[j] += p[j];
  }
  for (double& c : centroid) c /= static_cast<double>(n);

  std::vector<std::size_t> out;
  std::size_t first = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (euclid(pts[i], centroid) < euclid(pts[first], centroid)) first = i;
  }
  out.push_back(first);
  while (out.size() < std::min(k, n)) {
    std::size_t best = n;
    double best_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::find(out.begin(), out.end(), i) != out.end()) continue;
      double d = std::numeric_limits<double>::infinity();
      for (std::size_t s : out) d = std::min(d, euclid(pts[i], pts[s]));
      if (d > best_d) {
        best_d = d;
        best = i;
      }
    }
    out.push_back(best);
  }
  return out;
}

struct OracleMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Weighted metrics straight from the 2x2 confusion matrix.
inline OracleMetrics metrics_oracle(const std::vector<Decision>& labels, const std::vector<Decision>& predictions) {
  double cm[2][2] = {{0, 0}, {0, 0}};  // [actual][predicted]
  for (std::size_t i = 0; i < labels.size(); ++i) {
    cm[static_cast<int>(labels[i])][static_cast<int>(predictions[i])] += 1;
  }
  const double n = static_cast<double>(labels.size());
  OracleMetrics out;
  for (int c = 0; c < 2; ++c) {
    const double tp = cm[c][c];
    const double support = cm[c][0] + cm[c][1];
    const double predicted = cm[0][c] + cm[1][c];
    const double p = predicted == 0 ? 0.0 : tp / predicted;
    const double r = support == 0 ? 0.0 : tp / support;
    const double f = p + r == 0 ? 0.0 : 2 * p * r / (p + r);
    out.precision += support / n * p;
    out.recall += support / n * r;
    out.f1 += support / n * f;
  }
  return out;
}

}  // namespace logtriage::testing
