#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "logtriage/corpus.hpp"

namespace logtriage {

/// Row-major matrix of embeddings; every row has the same dimension.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  explicit EmbeddingMatrix(std::size_t dim) : dim_(dim) {}
  EmbeddingMatrix(std::size_t rows, std::size_t dim) : dim_(dim), values_(rows * dim, 0.0) {}

  /// Throws DimensionMismatch if rows differ in length, or ConfigError on
  /// non-finite values.
  static EmbeddingMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return dim_ == 0 ? 0 : values_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return values_.empty(); }

  std::span<const double> row(std::size_t i) const noexcept { return {values_.data() + i * dim_, dim_}; }
  std::span<double> row(std::size_t i) noexcept { return {values_.data() + i * dim_, dim_}; }

  void append(std::span<const double> values);
  void append(const EmbeddingMatrix& other);

  std::vector<std::vector<double>> to_rows() const;
  const std::vector<double>& data() const noexcept { return values_; }

  bool operator==(const EmbeddingMatrix&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

/// Feature-hashes the record's fields (timestamp excluded) into `dim` signed
/// buckets and scales to unit Euclidean norm. A record with no tokens maps to
/// the first basis vector.
std::vector<double> hash_embed(const LogRecord& record, std::size_t dim);

/// Canonical text of a record for remote embedding services.
std::string record_text(const LogRecord& record);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::string name() const = 0;
  virtual std::size_t dim() const = 0;
  /// One row per record, in order. Must be safe to call concurrently.
  virtual EmbeddingMatrix embed_batch(std::span<const LogRecord> records) const = 0;
};

class HashEmbeddingProvider final : public EmbeddingProvider {
 public:
  static constexpr std::size_t kDefaultDim = 64;

  explicit HashEmbeddingProvider(std::size_t dim = kDefaultDim);

  std::string name() const override { return "hash-" + std::to_string(dim_); }
  std::size_t dim() const override { return dim_; }
  EmbeddingMatrix embed_batch(std::span<const LogRecord> records) const override;

 private:
  std::size_t dim_;
};

struct RemoteEmbeddingOptions {
  std::string endpoint;  // full URL, e.g. https://host/v1/embeddings
  std::string api_key;
  std::string model;
  std::size_t dim = 0;  // expected dimension; 0 adopts the first response's
  std::size_t batch_size = 64;
  int max_retries = 3;
  std::chrono::milliseconds backoff{250};
  std::chrono::seconds timeout{60};
  std::size_t max_in_flight = 4;

  /// Reads EMBED_ENDPOINT / EMBED_API_KEY. Throws ConfigError when the
  /// endpoint is unset.
  static RemoteEmbeddingOptions from_env();
};

/// Client for an embedding service. Request body is
/// {"input": [text, ...], "model": ...}; the response may be either
/// {"data": [{"embedding": [...]}, ...]} or {"embeddings": [[...], ...]}.
class RemoteEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit RemoteEmbeddingProvider(RemoteEmbeddingOptions options);
  ~RemoteEmbeddingProvider() override;

  std::string name() const override { return "remote"; }
  std::size_t dim() const override;
  EmbeddingMatrix embed_batch(std::span<const LogRecord> records) const override;

 private:
  struct State;
  RemoteEmbeddingOptions options_;
  std::unique_ptr<State> state_;
};

}  // namespace logtriage
