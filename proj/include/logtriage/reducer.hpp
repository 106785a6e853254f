#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "logtriage/corpus.hpp"
#include "logtriage/embedding.hpp"

namespace logtriage {

enum class DistanceMetric { euclidean, cosine };

double distance(std::span<const double> a, std::span<const double> b, DistanceMetric metric);

/// Greedy max-min (farthest point) selection.
///
/// The first pick is the embedding closest to the centroid; every later pick
/// maximizes its minimum distance to the picks so far. Ties go to the lowest
/// index. Returns min(k, n) distinct indices in selection order.
std::vector<std::size_t> subsample_maxmin(const EmbeddingMatrix& embeddings, std::size_t k,
                                          DistanceMetric metric = DistanceMetric::euclidean);

struct ForestParams {
  std::size_t n_trees = 100;
  std::size_t subsample_size = 256;
  double contamination = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Average path-length normalizer for a sample of size m (c(1)=0, c(2)=1).
double average_path_length(std::size_t m);

/// Isolation forest anomaly scores s(x) = 2^(-E[h(x)] / c(m)), one per row,
/// strictly inside (0, 1). Deterministic for a given seed.
std::vector<double> anomaly_scores(const EmbeddingMatrix& embeddings, const ForestParams& params);

struct KeptRecord {
  std::size_t index = 0;  // position in the segment
  LogRecord record;
};

struct AnomalyScore {
  std::size_t index = 0;
  double score = 0.0;
};

struct ReductionTrace {
  bool subsample_applied = false;
  std::size_t target_k = 0;
  ForestParams forest;
  DistanceMetric metric = DistanceMetric::euclidean;
  std::size_t segment_size = 0;
  std::size_t maxmin_selected = 0;
  std::vector<std::size_t> flagged;  // indices added for their anomaly score
};

struct ReducedSegment {
  std::string app_id;
  std::size_t index = 0;
  std::vector<KeptRecord> kept;        // chronological
  std::vector<AnomalyScore> anomalies;  // every record of the segment, when it has >= 2
  ReductionTrace trace;

  std::vector<LogRecord> kept_records() const;
};

/// Keeps the whole segment when it has at most `target_k` records. Otherwise
/// keeps the max-min selection of size `target_k` unioned with the top
/// ceil(contamination * n) records by anomaly score.
ReducedSegment reduce_segment(const Segment& segment, const EmbeddingProvider& provider, std::size_t target_k,
                              const ForestParams& params, DistanceMetric metric = DistanceMetric::euclidean);

}  // namespace logtriage
