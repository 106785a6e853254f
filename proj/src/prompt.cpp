#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "logtriage/reasoner.hpp"

namespace logtriage {

namespace {

constexpr std::string_view kSystemPrompt =
    "As a cybersecurity expert, you specialize in investigating application logs and find signs of compromise. "
    "You understand MITRE ATT&CK Matrix, Cyber Kill Chain and TTPs (Techniques, Tactics and Practices). "
    "Your organization is under attack by a Threat Actor. You will be given the profile of the threat actor in "
    "terms of Cyber Kill Chain stages and TTPs used by the threat actor. Your task is to analyze application logs "
    "and find signs of compromise and malicious activities that match the threat actor profile.";

constexpr std::string_view kUserTemplate =
    R"(You are presented with various types of logs from an application that might have been compromised by the Threat Actor. The logs span a time period when the Threat Actor might have performed malicious activities. However, the logs may also contain benign activities that are not related to the compromise.

You will be given the '# Threat Actor Profile'. The profile consists of a short description of the threat actor, followed by MITRE ATT&CK Matrix consisting of Cyber Kill Chain stages. Under each Kill Chain stage you will find TTPs (Techniques, Tactics and Practices) used by the threat actor during the attack.

Your task is to analyze application logs using the supplemental enrichment data and find suspicious activity matching threat actor profile. You are going to list the Kill Chain Stages. Under each stage you'll list the matching TTP whose evidence you have found in the logs.

Consider the following guidance before judging an activity as suspicious:
{GUIDANCES}

You will be given the '# Application Logs' to help you analyze the activity. Application logs consist of the following logs:
{LOG_TYPES}

You will also be given the '# Enrichment Data' to help you analyze the logs. Enrichment data consists of the following data types:
{ENRICHMENT_DATA_TYPES}

You should focus on all the data, while keeping in mind that there might be benign activities. If you require additional information, you should clearly indicate it in your response. Your response should include:
    - High level behavior of the application.
    - Suspicious activities and entities involved.
    - Triage priority level of the application. Use the following guidances that include Kill Chain stages observed and other guidance. In your output you MUST list all of the guidance and whether the statement is true or false. Add "[True]" or "[False]" at the end of each guidance.
{GUIDANCES}

{INPUT_DATA}
)";

constexpr std::string_view kSlots[] = {"{GUIDANCES}", "{LOG_TYPES}", "{ENRICHMENT_DATA_TYPES}", "{INPUT_DATA}"};

std::string_view log_type_description(LogType type) {
  switch (type) {
    case LogType::signin: return "Sign-in logs: authentication events of the application's service principal.";
    case LogType::msgraph: return "Microsoft Graph activity: API calls the application made to Microsoft Graph.";
    case LogType::keyvault: return "Key Vault logs: secret, key and certificate operations.";
    case LogType::storage: return "Storage logs: reads and writes against storage accounts.";
    case LogType::kusto: return "Kusto logs: queries run against data explorer clusters.";
    case LogType::other: return "Other resource logs.";
  }
  return "";
}

std::string indent_lines(const std::vector<std::string>& lines, std::string_view pad) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out += '\n';
    out += pad;
    out += lines[i];
  }
  return out;
}

void replace_all(std::string& text, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
}

std::string cell(std::string_view value) {
  std::string out;
  out.reserve(value.size());
  for (char c : value) {
    if (c == '|') {
      out += "\\|";
    } else if (c == '\n' || c == '\r') {
      out += ' ';
    } else {
      out += c;
    }
  }
  return out.empty() ? "-" : out;
}

std::string table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::string out = "|";
  for (const auto& h : header) out += " " + h + " |";
  out += "\n|";
  for (std::size_t i = 0; i < header.size(); ++i) out += " --- |";
  out += '\n';
  for (const auto& row : rows) {
    out += '|';
    for (const auto& v : row) out += " " + cell(v) + " |";
    out += '\n';
  }
  return out;
}

std::vector<std::string> split_row(std::string_view line) {
  std::vector<std::string> cells;
  std::string cur;
  std::string_view body = line;
  if (!body.empty() && body.front() == '|') body.remove_prefix(1);
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (c == '\\' && i + 1 < body.size() && body[i + 1] == '|') {
      cur += '|';
      ++i;
    } else if (c == '|') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) cells.push_back(trim(cur));
  for (auto& c : cells) {
    if (c == "-") c.clear();
  }
  return cells;
}

std::string format_extra(const std::map<std::string, std::string>& extra) {
  std::string out;
  for (const auto& [k, v] : extra) {
    if (!out.empty()) out += "; ";
    out += k + "=" + v;
  }
  return out;
}

std::string format_resources(const std::vector<ResourceAccess>& resources) {
  std::string out;
  for (const auto& r : resources) {
    if (!out.empty()) out += "; ";
    out += r.resource + (r.sensitivity == Sensitivity::high ? " (high)" : " (normal)");
  }
  return out;
}

}  // namespace

const std::string& system_prompt() {
  static const std::string text(kSystemPrompt);
  return text;
}

std::size_t estimate_tokens(std::string_view text) noexcept {
  return (text.size() + 3) / 4;
}

std::string render_profile_section(const ThreatActorProfile& profile) {
  std::string out = "# Threat Actor Profile\n";
  if (profile.description && !profile.description->empty()) out += *profile.description + "\n";
  if (profile.stages.empty()) out += "No kill-chain stages are defined for this threat actor.\n";
  for (const auto& stage : profile.stages) {
    out += "- " + stage.name + ":\n";
    for (const auto& ttp : stage.ttps) out += "    - " + ttp + "\n";
  }
  return out;
}

std::string render_log_section(const std::vector<LogRecord>& records) {
  std::string out = "# Application Logs\n";
  constexpr LogType kOrder[] = {LogType::signin,  LogType::msgraph, LogType::keyvault,
                                LogType::storage, LogType::kusto,   LogType::other};
  for (LogType type : kOrder) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : records) {
      if (r.log_type != type) continue;
      rows.push_back({format_timestamp(r.ts), r.ip, r.operation, r.resource, r.result_code, r.actor,
                      format_extra(r.extra)});
    }
    if (rows.empty()) continue;
    out += "## " + std::string(to_string(type)) + "\n";
    out += table({"ts", "ip", "operation", "resource", "result_code", "actor", "extra"}, rows);
  }
  return out;
}

std::string render_ip_table(const std::vector<IpDetail>& rows) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& d : rows) {
    cells.push_back({d.ip, d.city, d.isp, d.is_proxy ? "true" : "false", d.is_benign_known ? "true" : "false",
                     format_resources(d.resources_accessed)});
  }
  return "## IP Details\n" +
         table({"ip", "city", "isp", "is_proxy", "is_benign_known", "resources_accessed"}, cells);
}

std::string render_enrichment_section(const EnrichmentBundle& e, const std::vector<LogRecord>& records) {
  std::string out = "# Enrichment Data\n";
  if (e.empty()) {
    out += "Enrichment data is unavailable for this application; analysis steps that depend on it are omitted.\n";
    return out;
  }
  if (!e.ip_details.empty()) out += render_ip_table(e.ip_details);
  if (!e.permissions.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& p : e.permissions) rows.push_back({p.resource, p.privilege, p.sensitive ? "true" : "false"});
    out += "## Permissions\n" + table({"resource", "privilege", "sensitive"}, rows);
  }
  if (!e.credentials.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& c : e.credentials) {
      rows.push_back({c.credential_id, format_timestamp(c.created), c.rotated ? format_timestamp(*c.rotated) : "",
                      format_timestamp(c.expires)});
    }
    out += "## Credentials\n" + table({"credential_id", "created", "rotated", "expires"}, rows);
  }
  if (!e.alerts.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& a : e.alerts) rows.push_back({a.alert_id, a.title, a.severity});
    out += "## Alerts\n" + table({"alert_id", "title", "severity"}, rows);
  }
  std::set<std::string> codes;
  for (const auto& r : records) {
    if (!explain_result_code(r.result_code).empty()) codes.insert(r.result_code);
  }
  if (!codes.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& c : codes) rows.push_back({c, std::string(explain_result_code(c))});
    out += "## Error Codes\n" + table({"result_code", "explanation"}, rows);
  }
  return out;
}

PromptBundle build_prompts(const ThreatActorProfile& profile, const CriteriaSet& set, const ReducedSegment& reduced,
                           const EnrichmentBundle& enrichment, const PromptOptions& options) {
  if (reduced.kept.empty()) throw ConfigError("build_prompts: reduced segment is empty");
  const std::vector<LogRecord> records = reduced.kept_records();

  const std::string guidances = indent_lines(render_guidances(set), "    ");

  std::set<LogType> types;
  for (const auto& r : records) types.insert(r.log_type);
  std::vector<std::string> type_lines;
  for (LogType t : types) {
    type_lines.push_back("- " + std::string(to_string(t)) + ": " + std::string(log_type_description(t)));
  }

  std::vector<std::string> enrichment_lines;
  if (!enrichment.ip_details.empty()) {
    enrichment_lines.push_back("- IP Details: city, ISP, proxy and known-benign flags of observed IP addresses, "
                               "with the resources each IP accessed and their sensitivity.");
  }
  if (!enrichment.permissions.empty()) {
    enrichment_lines.push_back("- Permissions: resources the application may access and whether they are sensitive.");
  }
  if (!enrichment.credentials.empty()) {
    enrichment_lines.push_back("- Credentials: creation, rotation and expiration of the application's credentials.");
  }
  if (!enrichment.alerts.empty()) {
    enrichment_lines.push_back("- Alerts: related alerts raised by other detectors.");
  }
  enrichment_lines.push_back("- Error Codes: explanations of result codes that appear in the logs.");
  if (enrichment.empty()) enrichment_lines = {"- None available."};

  const std::string input = render_profile_section(profile) + "\n" + render_log_section(records) + "\n" +
                            render_enrichment_section(enrichment, records);

  std::string user(kUserTemplate);
  replace_all(user, "{GUIDANCES}", guidances);
  replace_all(user, "{LOG_TYPES}", indent_lines(type_lines, "    "));
  replace_all(user, "{ENRICHMENT_DATA_TYPES}", indent_lines(enrichment_lines, "    "));
  // Input data goes last so that slot-like text inside logs is never substituted.
  replace_all(user, "{INPUT_DATA}", input);

  PromptBundle bundle;
  bundle.system_text = system_prompt();
  bundle.user_text = std::move(user);
  bundle.token_estimate = estimate_tokens(bundle.system_text) + estimate_tokens(bundle.user_text);
  if (bundle.token_estimate > options.token_budget) {
    throw TokenBudgetExceeded(bundle.token_estimate, options.token_budget);
  }
  return bundle;
}

namespace {

struct TableBlock {
  std::string heading;  // text of the "## " line above the table
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Collects the pipe tables that follow "## " headings inside a "# " section.
std::vector<TableBlock> section_tables(std::string_view text, std::string_view section) {
  std::vector<TableBlock> blocks;
  std::istringstream in{std::string(text)};
  std::string line;
  bool inside = false;
  TableBlock* current = nullptr;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0) {
      inside = trim(line.substr(2)) == section;
      current = nullptr;
      continue;
    }
    if (!inside) continue;
    if (line.rfind("## ", 0) == 0) {
      blocks.push_back(TableBlock{trim(line.substr(3)), {}, {}});
      current = &blocks.back();
      continue;
    }
    if (current == nullptr || line.empty() || line[0] != '|') continue;
    auto cells = split_row(line);
    if (current->header.empty()) {
      current->header = std::move(cells);
    } else if (!cells.empty() && cells[0] == "---") {
      continue;
    } else {
      cells.resize(current->header.size());
      current->rows.push_back(std::move(cells));
    }
  }
  return blocks;
}

std::map<std::string, std::string> row_map(const TableBlock& block, const std::vector<std::string>& row) {
  std::map<std::string, std::string> m;
  for (std::size_t i = 0; i < block.header.size() && i < row.size(); ++i) m[block.header[i]] = row[i];
  return m;
}

Timestamp parse_ts_or_zero(const std::string& text) {
  try {
    return text.empty() ? Timestamp{} : parse_timestamp(text);
  } catch (const ParseError&) {
    return Timestamp{};
  }
}

}  // namespace

Evidence parse_prompt_evidence(std::string_view text) {
  Evidence ev;
  for (const auto& block : section_tables(text, "Application Logs")) {
    const LogType type = log_type_from_string(block.heading);
    for (const auto& row : block.rows) {
      auto m = row_map(block, row);
      LogRecord r;
      r.ts = parse_ts_or_zero(m["ts"]);
      r.log_type = type;
      r.ip = m["ip"];
      r.operation = m["operation"];
      r.resource = m["resource"];
      r.result_code = m["result_code"];
      r.actor = m["actor"];
      if (!m["extra"].empty()) {
        for (const auto& kv : split(m["extra"], ';')) {
          const auto eq = kv.find('=');
          if (eq == std::string::npos) continue;
          r.extra[trim(kv.substr(0, eq))] = trim(kv.substr(eq + 1));
        }
      }
      ev.records.push_back(std::move(r));
    }
  }
  std::stable_sort(ev.records.begin(), ev.records.end(),
                   [](const LogRecord& a, const LogRecord& b) { return a.ts < b.ts; });

  for (const auto& block : section_tables(text, "Enrichment Data")) {
    for (const auto& row : block.rows) {
      auto m = row_map(block, row);
      if (block.heading == "IP Details") {
        IpDetail d;
        d.ip = m["ip"];
        d.city = m["city"];
        d.isp = m["isp"];
        d.is_proxy = m["is_proxy"] == "true";
        d.is_benign_known = m["is_benign_known"] == "true";
        if (!m["resources_accessed"].empty()) {
          for (const auto& item : split(m["resources_accessed"], ';')) {
            std::string name = trim(item);
            Sensitivity s = Sensitivity::normal;
            if (name.size() > 7 && name.substr(name.size() - 7) == " (high)") {
              s = Sensitivity::high;
              name = name.substr(0, name.size() - 7);
            } else if (name.size() > 9 && name.substr(name.size() - 9) == " (normal)") {
              name = name.substr(0, name.size() - 9);
            }
            d.resources_accessed.push_back({trim(name), s});
          }
        }
        ev.enrichment.ip_details.push_back(std::move(d));
      } else if (block.heading == "Permissions") {
        ev.enrichment.permissions.push_back({m["resource"], m["privilege"], m["sensitive"] == "true"});
      } else if (block.heading == "Credentials") {
        Credential c;
        c.credential_id = m["credential_id"];
        c.created = parse_ts_or_zero(m["created"]);
        if (!m["rotated"].empty()) c.rotated = parse_ts_or_zero(m["rotated"]);
        c.expires = parse_ts_or_zero(m["expires"]);
        ev.enrichment.credentials.push_back(std::move(c));
      } else if (block.heading == "Alerts") {
        ev.enrichment.alerts.push_back({m["alert_id"], m["title"], m["severity"]});
      }
    }
  }
  return ev;
}

std::vector<std::string> parse_prompt_guidances(std::string_view user_text) {
  std::vector<std::string> out;
  const auto start = user_text.find("Consider the following guidance");
  if (start == std::string_view::npos) return out;
  std::istringstream in{std::string(user_text.substr(start))};
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty()) break;
    const auto dot = t.find(". ");
    if (dot == std::string::npos || dot == 0 ||
        !std::all_of(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(dot),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      break;
    }
    out.push_back(trim(t.substr(dot + 2)));
  }
  return out;
}

}  // namespace logtriage
