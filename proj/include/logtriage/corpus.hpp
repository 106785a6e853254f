#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "logtriage/common.hpp"

namespace logtriage {

enum class LogType { signin, msgraph, keyvault, storage, kusto, other };

std::string_view to_string(LogType type) noexcept;
/// Unknown names map to LogType::other.
LogType log_type_from_string(std::string_view name) noexcept;

struct LogRecord {
  Timestamp ts;
  std::string app_id;
  LogType log_type = LogType::other;
  std::string ip;  // empty when absent or unparseable
  std::string operation;
  std::string resource;
  std::string result_code;
  std::string actor;
  std::map<std::string, std::string> extra;

  bool operator==(const LogRecord&) const = default;
};

/// True for IPv4 or IPv6 literals.
bool is_valid_ip(std::string_view ip);

/// Parses one line of the log file format. Throws ParseError with the line number.
LogRecord parse_log_line(std::string_view line, std::size_t line_number = 0);
/// Serializes to the log file format (keys in canonical order, no newline).
std::string serialize_log_record(const LogRecord& record);

/// Reads a line-delimited log file. Blank lines are skipped.
std::vector<LogRecord> load_log_file(const std::string& path);
void write_log_file(const std::string& path, const std::vector<LogRecord>& records);

enum class Sensitivity { high, normal };

struct ResourceAccess {
  std::string resource;
  Sensitivity sensitivity = Sensitivity::normal;

  bool operator==(const ResourceAccess&) const = default;
};

struct IpDetail {
  std::string ip;
  std::string city;
  std::string isp;
  bool is_proxy = false;
  bool is_benign_known = false;
  std::vector<ResourceAccess> resources_accessed;

  bool operator==(const IpDetail&) const = default;
};

struct Permission {
  std::string resource;
  std::string privilege;
  bool sensitive = false;

  bool operator==(const Permission&) const = default;
};

struct Credential {
  std::string credential_id;
  Timestamp created;
  std::optional<Timestamp> rotated;
  Timestamp expires;

  bool operator==(const Credential&) const = default;
};

struct Alert {
  std::string alert_id;
  std::string title;
  std::string severity;

  bool operator==(const Alert&) const = default;
};

struct EnrichmentBundle {
  std::vector<IpDetail> ip_details;
  std::vector<Permission> permissions;
  std::vector<Credential> credentials;
  std::vector<Alert> alerts;

  bool empty() const noexcept {
    return ip_details.empty() && permissions.empty() && credentials.empty() && alerts.empty();
  }
  const IpDetail* find_ip(std::string_view ip) const noexcept;
  bool operator==(const EnrichmentBundle&) const = default;
};

inline constexpr std::string_view kIpDetailsFile = "ip_details.jsonl";
inline constexpr std::string_view kPermissionsFile = "permissions.jsonl";
inline constexpr std::string_view kCredentialsFile = "credentials.jsonl";
inline constexpr std::string_view kAlertsFile = "alerts.jsonl";

/// Loads whichever of the four enrichment files exist in `dir`. A missing
/// directory is treated as empty.
EnrichmentBundle load_enrichments(const std::string& dir);
void write_enrichments(const std::string& dir, const EnrichmentBundle& bundle);

/// Application categories; codes are fixed by the labels file format.
enum class Category : int { benign_nonsuspicious = 0, benign_suspicious = 1, compromised = 2 };

std::string_view to_string(Category c) noexcept;
Category category_from_code(int code);

struct Segment {
  std::string app_id;
  std::size_t index = 0;
  std::vector<LogRecord> records;
};

struct ApplicationBundle {
  std::string app_id;
  std::vector<LogRecord> records;  // sorted by ts
  EnrichmentBundle enrichment;
  std::optional<Category> label;
  std::size_t signin_count = 0;
};

std::size_t count_signins(const std::vector<LogRecord>& records) noexcept;

/// Splits time-sorted records into ceil(n / cap) contiguous segments.
std::vector<Segment> segment_application(const std::vector<LogRecord>& records, std::size_t segment_cap);

// Corpus directory layout:
//   <root>/labels.json                  {"<app_id>": <code>, ...}   (optional)
//   <root>/apps/<app_id>/*.jsonl         log files, any split by type
//   <root>/apps/<app_id>/enrichment/     the four enrichment files
inline constexpr std::string_view kLabelsFile = "labels.json";
inline constexpr std::string_view kAppsDir = "apps";

/// Sorted application ids found under <root>/apps.
std::vector<std::string> list_applications(const std::string& corpus_root);
/// Loads and time-sorts one application's logs plus its enrichment.
ApplicationBundle load_application(const std::string& corpus_root, const std::string& app_id);

std::map<std::string, Category> load_labels(const std::string& path);
void write_labels(const std::string& path, const std::map<std::string, Category>& labels);

}  // namespace logtriage
