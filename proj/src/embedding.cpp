#include "logtriage/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <semaphore>

#include "json.hpp"
#include "logtriage/http_client.hpp"

using nlohmann::json;

namespace logtriage {

EmbeddingMatrix EmbeddingMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return EmbeddingMatrix{};
  EmbeddingMatrix m(rows.front().size());
  if (m.dim_ == 0) throw DimensionMismatch("embedding rows must have positive dimension");
  m.values_.reserve(rows.size() * m.dim_);
  for (const auto& r : rows) m.append(r);
  return m;
}

void EmbeddingMatrix::append(std::span<const double> values) {
  if (dim_ == 0) dim_ = values.size();
  if (values.size() != dim_ || dim_ == 0) {
    throw DimensionMismatch("embedding of dimension " + std::to_string(values.size()) +
                            " does not match " + std::to_string(dim_));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw ConfigError("embedding contains a non-finite value");
  }
  values_.insert(values_.end(), values.begin(), values.end());
}

void EmbeddingMatrix::append(const EmbeddingMatrix& other) {
  for (std::size_t i = 0; i < other.rows(); ++i) append(other.row(i));
}

std::vector<std::vector<double>> EmbeddingMatrix::to_rows() const {
  std::vector<std::vector<double>> out;
  out.reserve(rows());
  for (std::size_t i = 0; i < rows(); ++i) out.emplace_back(row(i).begin(), row(i).end());
  return out;
}

namespace {

template <typename Fn>
void for_each_field(const LogRecord& r, Fn&& fn) {
  if (r.log_type != LogType::other) fn("log_type", to_string(r.log_type));
  fn("ip", r.ip);
  fn("operation", r.operation);
  fn("resource", r.resource);
  fn("result_code", r.result_code);
  fn("actor", r.actor);
  for (const auto& [k, v] : r.extra) fn(k, v);
}

void add_token(std::vector<double>& v, std::string_view token) {
  const std::uint64_t h = fnv1a64(token);
  const std::size_t bucket = static_cast<std::size_t>(h % v.size());
  const double sign = (splitmix64(h) >> 63) ? -1.0 : 1.0;
  v[bucket] += sign;
}

}  // namespace

std::vector<double> hash_embed(const LogRecord& record, std::size_t dim) {
  if (dim < 2) throw ConfigError("hash_embed: dim must be at least 2");
  std::vector<double> v(dim, 0.0);
  for_each_field(record, [&](std::string_view name, std::string_view value) {
    if (value.empty()) return;
    const std::string lower = to_lower(value);
    add_token(v, std::string(name) + "=" + lower);

    // Sub-tokens let related values (same path prefix, same subnet) share buckets.
    std::vector<std::string> parts;
    std::string cur;
    for (char c : lower) {
      if (std::isalnum(static_cast<unsigned char>(c))) {
        cur += c;
      } else if (!cur.empty()) {
        parts.push_back(std::move(cur));
        cur.clear();
      }
    }
    if (!cur.empty()) parts.push_back(std::move(cur));
    if (parts.size() > 1) {
      for (const auto& p : parts) add_token(v, std::string(name) + ":" + p);
    }
  });

  double norm2 = 0.0;
  for (double x : v) norm2 += x * x;
  if (norm2 == 0.0) {
    std::fill(v.begin(), v.end(), 0.0);
    v[0] = 1.0;
    return v;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
  return v;
}

std::string record_text(const LogRecord& record) {
  std::string out;
  for_each_field(record, [&](std::string_view name, std::string_view value) {
    if (value.empty()) return;
    if (!out.empty()) out += ' ';
    out += name;
    out += '=';
    out += value;
  });
  return out;
}

HashEmbeddingProvider::HashEmbeddingProvider(std::size_t dim) : dim_(dim) {
  if (dim < 2) throw ConfigError("hash embedding dim must be at least 2");
}

EmbeddingMatrix HashEmbeddingProvider::embed_batch(std::span<const LogRecord> records) const {
  if (records.empty()) throw ConfigError("embed_batch: no records");
  EmbeddingMatrix m(records.size(), dim_);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto v = hash_embed(records[i], dim_);
    std::copy(v.begin(), v.end(), m.row(i).begin());
  }
  return m;
}

RemoteEmbeddingOptions RemoteEmbeddingOptions::from_env() {
  RemoteEmbeddingOptions opts;
  const char* endpoint = std::getenv("EMBED_ENDPOINT");
  if (endpoint == nullptr || *endpoint == '\0') throw ConfigError("EMBED_ENDPOINT is not set");
  opts.endpoint = endpoint;
  if (const char* key = std::getenv("EMBED_API_KEY")) opts.api_key = key;
  return opts;
}

struct RemoteEmbeddingProvider::State {
  explicit State(std::size_t limit) : in_flight(static_cast<std::ptrdiff_t>(limit)) {}

  std::counting_semaphore<1024> in_flight;
  mutable std::mutex mu;
  std::size_t dim = 0;
};

RemoteEmbeddingProvider::RemoteEmbeddingProvider(RemoteEmbeddingOptions options)
    : options_(std::move(options)),
      state_(std::make_unique<State>(std::clamp<std::size_t>(options_.max_in_flight, 1, 1024))) {
  if (options_.endpoint.empty()) throw ConfigError("remote embedding endpoint is empty");
  if (options_.batch_size == 0) throw ConfigError("remote embedding batch_size must be positive");
  state_->dim = options_.dim;
}

RemoteEmbeddingProvider::~RemoteEmbeddingProvider() = default;

std::size_t RemoteEmbeddingProvider::dim() const {
  std::lock_guard lock(state_->mu);
  return state_->dim;
}

namespace {

std::vector<std::vector<double>> parse_embedding_response(const std::string& body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::exception& e) {
    throw RemoteError(std::string("embedding response is not JSON: ") + e.what());
  }
  std::vector<std::vector<double>> out;
  try {
    if (doc.contains("data")) {
      for (const auto& item : doc.at("data")) out.push_back(item.at("embedding").get<std::vector<double>>());
    } else if (doc.contains("embeddings")) {
      out = doc.at("embeddings").get<std::vector<std::vector<double>>>();
    } else {
      throw RemoteError("embedding response has neither 'data' nor 'embeddings'");
    }
  } catch (const json::exception& e) {
    throw RemoteError(std::string("malformed embedding response: ") + e.what());
  }
  return out;
}

}  // namespace

EmbeddingMatrix RemoteEmbeddingProvider::embed_batch(std::span<const LogRecord> records) const {
  if (records.empty()) throw ConfigError("embed_batch: no records");
  std::vector<std::pair<std::string, std::string>> headers;
  if (!options_.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + options_.api_key);
  const RetryPolicy policy{options_.max_retries, options_.backoff, options_.timeout};

  EmbeddingMatrix result;
  for (std::size_t start = 0; start < records.size(); start += options_.batch_size) {
    const std::size_t end = std::min(records.size(), start + options_.batch_size);
    json request;
    request["input"] = json::array();
    for (std::size_t i = start; i < end; ++i) request["input"].push_back(record_text(records[i]));
    if (!options_.model.empty()) request["model"] = options_.model;

    state_->in_flight.acquire();
    HttpResult response;
    try {
      response = post_json(options_.endpoint, request.dump(), headers, policy);
    } catch (...) {
      state_->in_flight.release();
      throw;
    }
    state_->in_flight.release();

    const auto rows = parse_embedding_response(response.body);
    if (rows.size() != end - start) {
      throw RemoteError("embedding service returned " + std::to_string(rows.size()) + " vectors for " +
                        std::to_string(end - start) + " inputs");
    }
    for (const auto& row : rows) {
      {
        std::lock_guard lock(state_->mu);
        if (state_->dim == 0) state_->dim = row.size();
        if (row.size() != state_->dim) {
          throw DimensionMismatch("remote embedding has dimension " + std::to_string(row.size()) +
                                  ", expected " + std::to_string(state_->dim));
        }
      }
      result.append(row);
    }
  }
  return result;
}

}  // namespace logtriage
