#include "logtriage/reducer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace logtriage {

double distance(std::span<const double> a, std::span<const double> b, DistanceMetric metric) {
  if (a.size() != b.size()) throw DimensionMismatch("distance: vectors differ in dimension");
  if (metric == DistanceMetric::euclidean) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = a[i] - b[i];
      s += d * d;
    }
    return std::sqrt(s);
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 1.0;
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<std::size_t> subsample_maxmin(const EmbeddingMatrix& embeddings, std::size_t k,
                                          DistanceMetric metric) {
  if (k == 0) throw ConfigError("subsample_maxmin: k must be at least 1");
  const std::size_t n = embeddings.rows();
  if (n == 0) throw ConfigError("subsample_maxmin: no embeddings");
  const std::size_t dim = embeddings.dim();
  const std::size_t picks = std::min(k, n);

  std::vector<double> centroid(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = embeddings.row(i);
    for (std::size_t j = 0; j < dim; ++j) centroid[j] += r[j];
  }
  for (double& c : centroid) c /= static_cast<double>(n);

  std::size_t first = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double d = distance(embeddings.row(i), centroid, metric);
    if (d < best) {
      best = d;
      first = i;
    }
  }

  std::vector<std::size_t> selected;
  selected.reserve(picks);
  std::vector<char> taken(n, 0);
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());

  std::size_t current = first;
  while (true) {
    selected.push_back(current);
    taken[current] = 1;
    if (selected.size() == picks) break;

    const auto anchor = embeddings.row(current);
    std::size_t next = n;
    double next_dist = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      min_dist[i] = std::min(min_dist[i], distance(embeddings.row(i), anchor, metric));
      if (min_dist[i] > next_dist) {
        next_dist = min_dist[i];
        next = i;
      }
    }
    current = next;
  }
  return selected;
}

void ForestParams::validate() const {
  if (n_trees == 0) throw ConfigError("forest n_trees must be positive");
  if (subsample_size < 2) throw ConfigError("forest subsample_size must be at least 2");
  if (!(contamination > 0.0 && contamination <= 0.5)) {
    throw ConfigError("forest contamination must lie in (0, 0.5]");
  }
}

double average_path_length(std::size_t m) {
  if (m <= 1) return 0.0;
  if (m == 2) return 1.0;
  constexpr double kEulerGamma = 0.5772156649;
  const double harmonic = std::log(static_cast<double>(m - 1)) + kEulerGamma;
  return 2.0 * harmonic - 2.0 * static_cast<double>(m - 1) / static_cast<double>(m);
}

namespace {

struct TreeNode {
  std::size_t attr = 0;
  double split = 0.0;
  int left = -1;  // -1 marks an external node
  int right = -1;
  std::size_t size = 0;
};

class IsolationTree {
 public:
  IsolationTree(const EmbeddingMatrix& data, std::vector<std::size_t> sample, Rng& rng) {
    const auto height_limit =
        static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(std::max<std::size_t>(sample.size(), 2)))));
    build(data, sample, 0, height_limit, rng);
  }

  double path_length(std::span<const double> x) const {
    std::size_t depth = 0;
    int node = 0;
    while (nodes_[static_cast<std::size_t>(node)].left >= 0) {
      const auto& n = nodes_[static_cast<std::size_t>(node)];
      node = x[n.attr] <= n.split ? n.left : n.right;
      ++depth;
    }
    return static_cast<double>(depth) + average_path_length(nodes_[static_cast<std::size_t>(node)].size);
  }

 private:
  int build(const EmbeddingMatrix& data, std::vector<std::size_t>& points, std::size_t depth, std::size_t limit,
            Rng& rng) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(TreeNode{});
    nodes_.back().size = points.size();
    if (points.size() <= 1 || depth >= limit) return id;

    // Only coordinates with a non-empty range can split this node.
    const std::size_t dim = data.dim();
    std::vector<std::size_t> candidates;
    std::vector<double> lo(dim, std::numeric_limits<double>::infinity());
    std::vector<double> hi(dim, -std::numeric_limits<double>::infinity());
    for (std::size_t p : points) {
      const auto r = data.row(p);
      for (std::size_t j = 0; j < dim; ++j) {
        lo[j] = std::min(lo[j], r[j]);
        hi[j] = std::max(hi[j], r[j]);
      }
    }
    for (std::size_t j = 0; j < dim; ++j) {
      if (hi[j] > lo[j]) candidates.push_back(j);
    }
    if (candidates.empty()) return id;

    const std::size_t attr = candidates[rng.below(candidates.size())];
    double split = rng.uniform(lo[attr], hi[attr]);
    if (split >= hi[attr]) split = std::nextafter(hi[attr], lo[attr]);

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (std::size_t p : points) {
      (data.row(p)[attr] <= split ? left : right).push_back(p);
    }
    std::vector<std::size_t>().swap(points);

    const int l = build(data, left, depth + 1, limit, rng);
    const int r = build(data, right, depth + 1, limit, rng);
    nodes_[static_cast<std::size_t>(id)].attr = attr;
    nodes_[static_cast<std::size_t>(id)].split = split;
    nodes_[static_cast<std::size_t>(id)].left = l;
    nodes_[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  std::vector<TreeNode> nodes_;
};

}  // namespace

std::vector<double> anomaly_scores(const EmbeddingMatrix& embeddings, const ForestParams& params) {
  params.validate();
  const std::size_t n = embeddings.rows();
  if (n < 2) throw ConfigError("anomaly_scores needs at least 2 embeddings");
  const std::size_t m = std::min(params.subsample_size, n);
  const double norm = average_path_length(m);

  Rng rng(params.seed);
  std::vector<double> total(n, 0.0);
  std::vector<std::size_t> pool(n);
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < m; ++i) {
      std::swap(pool[i], pool[i + rng.below(n - i)]);
    }
    IsolationTree tree(embeddings, std::vector<std::size_t>(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m)),
                       rng);
    for (std::size_t i = 0; i < n; ++i) total[i] += tree.path_length(embeddings.row(i));
  }

  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mean_path = total[i] / static_cast<double>(params.n_trees);
    scores[i] = std::exp2(-mean_path / norm);
  }
  return scores;
}

std::vector<LogRecord> ReducedSegment::kept_records() const {
  std::vector<LogRecord> out;
  out.reserve(kept.size());
  for (const auto& k : kept) out.push_back(k.record);
  return out;
}

ReducedSegment reduce_segment(const Segment& segment, const EmbeddingProvider& provider, std::size_t target_k,
                              const ForestParams& params, DistanceMetric metric) {
  if (segment.records.empty()) throw ConfigError("reduce_segment: empty segment");
  if (target_k == 0) throw ConfigError("reduce_segment: target_k must be at least 1");
  params.validate();

  const std::size_t n = segment.records.size();
  ReducedSegment out;
  out.app_id = segment.app_id;
  out.index = segment.index;
  out.trace.target_k = target_k;
  out.trace.forest = params;
  out.trace.metric = metric;
  out.trace.segment_size = n;

  const EmbeddingMatrix embeddings = provider.embed_batch(segment.records);
  if (embeddings.rows() != n) throw DimensionMismatch("embedding provider returned the wrong number of rows");

  std::vector<double> scores;
  if (n >= 2) {
    scores = anomaly_scores(embeddings, params);
    out.anomalies.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.anomalies.push_back({i, scores[i]});
  }

  std::vector<std::size_t> keep;
  if (n <= target_k) {
    keep.resize(n);
    std::iota(keep.begin(), keep.end(), std::size_t{0});
  } else {
    out.trace.subsample_applied = true;
    keep = subsample_maxmin(embeddings, target_k, metric);
    out.trace.maxmin_selected = keep.size();

    const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
    if (*hi > *lo) {
      const auto top = static_cast<std::size_t>(std::ceil(params.contamination * static_cast<double>(n)));
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
      order.resize(std::min(top, n));
      out.trace.flagged = order;
      std::sort(out.trace.flagged.begin(), out.trace.flagged.end());
      keep.insert(keep.end(), order.begin(), order.end());
    }
    std::sort(keep.begin(), keep.end());
    keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  }

  out.kept.reserve(keep.size());
  for (std::size_t i : keep) out.kept.push_back({i, segment.records[i]});
  return out;
}

}  // namespace logtriage
