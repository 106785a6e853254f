#include "logtriage/corpus.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace logtriage {

std::string_view to_string(LogType type) noexcept {
  switch (type) {
    case LogType::signin: return "signin";
    case LogType::msgraph: return "msgraph";
    case LogType::keyvault: return "keyvault";
    case LogType::storage: return "storage";
    case LogType::kusto: return "kusto";
    case LogType::other: return "other";
  }
  return "other";
}

LogType log_type_from_string(std::string_view name) noexcept {
  const std::string lower = to_lower(name);
  if (lower == "signin") return LogType::signin;
  if (lower == "msgraph") return LogType::msgraph;
  if (lower == "keyvault") return LogType::keyvault;
  if (lower == "storage") return LogType::storage;
  if (lower == "kusto") return LogType::kusto;
  return LogType::other;
}

bool is_valid_ip(std::string_view ip) {
  if (ip.empty() || ip.size() > 45) return false;
  const std::string s(ip);
  unsigned char buf[sizeof(struct in6_addr)];
  return inet_pton(AF_INET, s.c_str(), buf) == 1 || inet_pton(AF_INET6, s.c_str(), buf) == 1;
}

namespace {

constexpr std::string_view kRecordKeys[] = {"ts", "app_id", "log_type", "ip", "operation",
                                            "resource", "result_code", "actor", "extra"};

std::string scalar_to_string(const json& value, std::string_view key, std::size_t line) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_null()) return {};
  if (value.is_number() || value.is_boolean()) return value.dump();
  throw ParseError("field '" + std::string(key) + "' must be a scalar", line);
}

json parse_json_line(std::string_view line, std::size_t line_number) {
  try {
    json value = json::parse(line);
    if (!value.is_object()) throw ParseError("expected a JSON object", line_number);
    return value;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), line_number);
  }
}

std::string required_string(const json& obj, std::string_view key, std::size_t line) {
  const auto it = obj.find(std::string(key));
  if (it == obj.end() || it->is_null()) {
    throw ParseError("missing required field '" + std::string(key) + "'", line);
  }
  std::string value = scalar_to_string(*it, key, line);
  if (value.empty()) throw ParseError("empty required field '" + std::string(key) + "'", line);
  return value;
}

std::string optional_string(const json& obj, std::string_view key, std::size_t line) {
  const auto it = obj.find(std::string(key));
  if (it == obj.end()) return {};
  return scalar_to_string(*it, key, line);
}

bool optional_bool(const json& obj, std::string_view key, std::size_t line) {
  const auto it = obj.find(std::string(key));
  if (it == obj.end() || it->is_null()) return false;
  if (it->is_boolean()) return it->get<bool>();
  if (it->is_string()) {
    const std::string v = to_lower(it->get<std::string>());
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no" || v.empty()) return false;
  }
  throw ParseError("field '" + std::string(key) + "' must be a boolean", line);
}

template <typename Fn>
void for_each_line(const std::string& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    fn(line, number);
  }
  if (in.bad()) throw IoError("read failed for '" + path + "'");
}

}  // namespace

LogRecord parse_log_line(std::string_view line, std::size_t line_number) {
  const json obj = parse_json_line(line, line_number);
  LogRecord rec;
  try {
    rec.ts = parse_timestamp(required_string(obj, "ts", line_number));
  } catch (const ParseError& e) {
    if (e.line() != 0) throw;
    throw ParseError(e.what(), line_number);
  }
  rec.app_id = required_string(obj, "app_id", line_number);
  rec.log_type = log_type_from_string(required_string(obj, "log_type", line_number));
  rec.ip = trim(optional_string(obj, "ip", line_number));
  if (!rec.ip.empty() && !is_valid_ip(rec.ip)) rec.ip.clear();
  rec.operation = optional_string(obj, "operation", line_number);
  rec.resource = optional_string(obj, "resource", line_number);
  rec.result_code = optional_string(obj, "result_code", line_number);
  rec.actor = optional_string(obj, "actor", line_number);

  if (const auto it = obj.find("extra"); it != obj.end() && !it->is_null()) {
    if (!it->is_object()) throw ParseError("field 'extra' must be an object", line_number);
    for (const auto& [key, value] : it->items()) {
      rec.extra[key] = scalar_to_string(value, key, line_number);
    }
  }
  for (const auto& [key, value] : obj.items()) {
    if (std::find(std::begin(kRecordKeys), std::end(kRecordKeys), key) == std::end(kRecordKeys)) {
      rec.extra[key] = scalar_to_string(value, key, line_number);
    }
  }
  return rec;
}

std::string serialize_log_record(const LogRecord& record) {
  ordered_json obj;
  obj["ts"] = format_timestamp(record.ts);
  obj["app_id"] = record.app_id;
  obj["log_type"] = std::string(to_string(record.log_type));
  obj["ip"] = record.ip;
  obj["operation"] = record.operation;
  obj["resource"] = record.resource;
  obj["result_code"] = record.result_code;
  obj["actor"] = record.actor;
  ordered_json extra = ordered_json::object();
  for (const auto& [k, v] : record.extra) extra[k] = v;
  obj["extra"] = std::move(extra);
  return obj.dump();
}

std::vector<LogRecord> load_log_file(const std::string& path) {
  std::vector<LogRecord> records;
  try {
    for_each_line(path, [&](const std::string& line, std::size_t number) {
      records.push_back(parse_log_line(line, number));
    });
  } catch (const ParseError& e) {
    throw ParseError::in_file(path, e);
  }
  return records;
}

void write_log_file(const std::string& path, const std::vector<LogRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += serialize_log_record(r);
    out += '\n';
  }
  write_file(path, out);
}

const IpDetail* EnrichmentBundle::find_ip(std::string_view ip) const noexcept {
  for (const auto& d : ip_details) {
    if (d.ip == ip) return &d;
  }
  return nullptr;
}

namespace {

Sensitivity sensitivity_from_string(const std::string& s, std::size_t line) {
  const std::string lower = to_lower(s);
  if (lower == "high") return Sensitivity::high;
  if (lower == "normal" || lower.empty()) return Sensitivity::normal;
  throw ParseError("unknown sensitivity '" + s + "'", line);
}

std::string_view to_string(Sensitivity s) {
  return s == Sensitivity::high ? "high" : "normal";
}

template <typename Row, typename ParseFn>
std::vector<Row> load_rows(const fs::path& path, ParseFn&& parse) {
  std::vector<Row> rows;
  if (!fs::exists(path)) return rows;
  try {
    for_each_line(path.string(), [&](const std::string& line, std::size_t number) {
      rows.push_back(parse(parse_json_line(line, number), number));
    });
  } catch (const ParseError& e) {
    throw ParseError::in_file(path.string(), e);
  }
  return rows;
}

}  // namespace

EnrichmentBundle load_enrichments(const std::string& dir) {
  EnrichmentBundle bundle;
  const fs::path root(dir);

  bundle.ip_details = load_rows<IpDetail>(root / kIpDetailsFile, [](const json& obj, std::size_t line) {
    IpDetail d;
    d.ip = required_string(obj, "ip", line);
    d.city = optional_string(obj, "city", line);
    d.isp = optional_string(obj, "isp", line);
    d.is_proxy = optional_bool(obj, "is_proxy", line);
    d.is_benign_known = optional_bool(obj, "is_benign_known", line);
    if (const auto it = obj.find("resources_accessed"); it != obj.end() && !it->is_null()) {
      if (!it->is_array()) throw ParseError("'resources_accessed' must be a list", line);
      for (const auto& item : *it) {
        if (!item.is_object()) throw ParseError("'resources_accessed' entries must be objects", line);
        d.resources_accessed.push_back(
            {required_string(item, "resource", line),
             sensitivity_from_string(optional_string(item, "sensitivity", line), line)});
      }
    }
    return d;
  });
  std::set<std::string> seen;
  for (const auto& d : bundle.ip_details) {
    if (!seen.insert(d.ip).second) throw ParseError("duplicate ip '" + d.ip + "' in ip_details");
  }

  bundle.permissions = load_rows<Permission>(root / kPermissionsFile, [](const json& obj, std::size_t line) {
    return Permission{required_string(obj, "resource", line), optional_string(obj, "privilege", line),
                      optional_bool(obj, "sensitive", line)};
  });

  bundle.credentials = load_rows<Credential>(root / kCredentialsFile, [](const json& obj, std::size_t line) {
    Credential c;
    c.credential_id = required_string(obj, "credential_id", line);
    try {
      c.created = parse_timestamp(required_string(obj, "created", line));
      c.expires = parse_timestamp(required_string(obj, "expires", line));
      const std::string rotated = optional_string(obj, "rotated", line);
      if (!rotated.empty()) c.rotated = parse_timestamp(rotated);
    } catch (const ParseError& e) {
      if (e.line() != 0) throw;
      throw ParseError(e.what(), line);
    }
    if (c.expires < c.created) {
      throw ParseError("credential '" + c.credential_id + "' expires before it was created", line);
    }
    return c;
  });

  bundle.alerts = load_rows<Alert>(root / kAlertsFile, [](const json& obj, std::size_t line) {
    return Alert{required_string(obj, "alert_id", line), optional_string(obj, "title", line),
                 optional_string(obj, "severity", line)};
  });
  return bundle;
}

void write_enrichments(const std::string& dir, const EnrichmentBundle& bundle) {
  const fs::path root(dir);
  fs::create_directories(root);
  auto write_rows = [&](std::string_view name, const auto& rows, auto&& to_json) {
    std::string out;
    for (const auto& row : rows) {
      out += to_json(row).dump();
      out += '\n';
    }
    write_file((root / name).string(), out);
  };
  write_rows(kIpDetailsFile, bundle.ip_details, [](const IpDetail& d) {
    ordered_json obj;
    obj["ip"] = d.ip;
    obj["city"] = d.city;
    obj["isp"] = d.isp;
    obj["is_proxy"] = d.is_proxy;
    obj["is_benign_known"] = d.is_benign_known;
    ordered_json res = ordered_json::array();
    for (const auto& r : d.resources_accessed) {
      ordered_json item;
      item["resource"] = r.resource;
      item["sensitivity"] = std::string(to_string(r.sensitivity));
      res.push_back(std::move(item));
    }
    obj["resources_accessed"] = std::move(res);
    return obj;
  });
  write_rows(kPermissionsFile, bundle.permissions, [](const Permission& p) {
    ordered_json obj;
    obj["resource"] = p.resource;
    obj["privilege"] = p.privilege;
    obj["sensitive"] = p.sensitive;
    return obj;
  });
  write_rows(kCredentialsFile, bundle.credentials, [](const Credential& c) {
    ordered_json obj;
    obj["credential_id"] = c.credential_id;
    obj["created"] = format_timestamp(c.created);
    obj["rotated"] = c.rotated ? ordered_json(format_timestamp(*c.rotated)) : ordered_json(nullptr);
    obj["expires"] = format_timestamp(c.expires);
    return obj;
  });
  write_rows(kAlertsFile, bundle.alerts, [](const Alert& a) {
    ordered_json obj;
    obj["alert_id"] = a.alert_id;
    obj["title"] = a.title;
    obj["severity"] = a.severity;
    return obj;
  });
}

std::string_view to_string(Category c) noexcept {
  switch (c) {
    case Category::benign_nonsuspicious: return "benign_nonsuspicious";
    case Category::benign_suspicious: return "benign_suspicious";
    case Category::compromised: return "compromised";
  }
  return "unknown";
}

Category category_from_code(int code) {
  switch (code) {
    case 0: return Category::benign_nonsuspicious;
    case 1: return Category::benign_suspicious;
    case 2: return Category::compromised;
    default: throw ParseError("unknown category code " + std::to_string(code));
  }
}

std::size_t count_signins(const std::vector<LogRecord>& records) noexcept {
  return static_cast<std::size_t>(std::count_if(records.begin(), records.end(),
                                                [](const LogRecord& r) { return r.log_type == LogType::signin; }));
}

std::vector<Segment> segment_application(const std::vector<LogRecord>& records, std::size_t segment_cap) {
  if (segment_cap == 0) throw ConfigError("segment_cap must be at least 1");
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].ts < records[i - 1].ts) {
      throw ConfigError("records are not sorted by timestamp (position " + std::to_string(i) + ")");
    }
  }
  std::vector<Segment> segments;
  segments.reserve((records.size() + segment_cap - 1) / segment_cap);
  for (std::size_t start = 0; start < records.size(); start += segment_cap) {
    const std::size_t end = std::min(records.size(), start + segment_cap);
    Segment seg;
    seg.app_id = records[start].app_id;
    seg.index = segments.size();
    seg.records.assign(records.begin() + static_cast<std::ptrdiff_t>(start),
                       records.begin() + static_cast<std::ptrdiff_t>(end));
    segments.push_back(std::move(seg));
  }
  return segments;
}

std::vector<std::string> list_applications(const std::string& corpus_root) {
  const fs::path apps = fs::path(corpus_root) / kAppsDir;
  if (!fs::is_directory(apps)) throw IoError("no '" + std::string(kAppsDir) + "' directory in '" + corpus_root + "'");
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(apps)) {
    if (entry.is_directory()) ids.push_back(entry.path().filename().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

ApplicationBundle load_application(const std::string& corpus_root, const std::string& app_id) {
  const fs::path dir = fs::path(corpus_root) / kAppsDir / app_id;
  if (!fs::is_directory(dir)) throw IoError("application directory not found: " + dir.string());

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  ApplicationBundle bundle;
  bundle.app_id = app_id;
  for (const auto& file : files) {
    auto records = load_log_file(file.string());
    for (auto& r : records) {
      if (r.app_id != app_id) {
        throw ParseError(file.string() + ": record app_id '" + r.app_id + "' does not match '" + app_id + "'");
      }
      bundle.records.push_back(std::move(r));
    }
  }
  std::stable_sort(bundle.records.begin(), bundle.records.end(),
                   [](const LogRecord& a, const LogRecord& b) { return a.ts < b.ts; });
  bundle.signin_count = count_signins(bundle.records);
  bundle.enrichment = load_enrichments((dir / "enrichment").string());
  return bundle;
}

std::map<std::string, Category> load_labels(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ParseError(path + ": malformed labels file: " + e.what());
  }
  if (!doc.is_object()) throw ParseError(path + ": labels file must map app_id to a category code");
  std::map<std::string, Category> labels;
  for (const auto& [app, code] : doc.items()) {
    if (!code.is_number_integer()) throw ParseError(path + ": label for '" + app + "' is not an integer");
    labels[app] = category_from_code(code.get<int>());
  }
  return labels;
}

void write_labels(const std::string& path, const std::map<std::string, Category>& labels) {
  ordered_json doc = ordered_json::object();
  for (const auto& [app, c] : labels) doc[app] = static_cast<int>(c);
  write_file(path, doc.dump(2) + "\n");
}

}  // namespace logtriage
