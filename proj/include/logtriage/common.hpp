#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace logtriage {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or argument supplied by the caller.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input text or file content that does not follow the documented format.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  /// 1-based line number, 0 when not tied to a line.
  std::size_t line() const noexcept { return line_; }

  /// Same error with a file path prefix; the line number is kept.
  static ParseError in_file(const std::string& path, const ParseError& inner) {
    return ParseError(Prefixed{}, path + ": " + inner.what(), inner.line());
  }

 private:
  struct Prefixed {};
  ParseError(Prefixed, const std::string& what, std::size_t line) : Error(what), line_(line) {}

  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A remote service failed, or kept failing after the configured retries.
class RemoteError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// Stable hashing. std::hash is not stable across implementations, and seeds
// derived from app ids must be.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed for a (master, tag, index) triple; independent of scheduling order.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t index = 0) noexcept;

/// mt19937_64 with portable distribution mappings. The std distributions are
/// implementation-defined, so results would differ between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  /// Uniform integer in [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi);
  bool bernoulli(double p) { return uniform() < p; }
  double normal();
  /// Pareto(xmin, alpha) via inverse CDF.
  double pareto(double xmin, double alpha);

  template <typename T>
  const T& pick(const std::vector<T>& items) {
    return items[below(items.size())];
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// UTC timestamps as milliseconds since the Unix epoch.
struct Timestamp {
  std::int64_t millis = 0;

  auto operator<=>(const Timestamp&) const = default;
};

/// Accepts YYYY-MM-DDTHH:MM:SS[.fff][Z|+HH:MM|-HH:MM]; a space may replace 'T'.
Timestamp parse_timestamp(std::string_view text);
/// Always emits YYYY-MM-DDTHH:MM:SS[.mmm]Z (fraction only when non-zero).
std::string format_timestamp(Timestamp ts);
/// YYYY-MM-DD of the timestamp.
std::string format_date(Timestamp ts);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
bool starts_with_icase(std::string_view s, std::string_view prefix);
bool contains_icase(std::string_view haystack, std::string_view needle);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace logtriage
