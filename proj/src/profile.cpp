#include "logtriage/profile.hpp"

#include <yaml-cpp/yaml.h>

#include <cctype>
#include <filesystem>
#include <set>
#include <sstream>

namespace logtriage {

namespace {

std::string expand_tabs(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t column = 0;
  for (char c : text) {
    if (c == '\t') {
      const std::size_t spaces = 8 - column % 8;
      out.append(spaces, ' ');
      column += spaces;
    } else {
      out += c;
      column = c == '\n' ? 0 : column + 1;
    }
  }
  return out;
}

YAML::Node load_yaml(std::string_view text, std::string_view what) {
  try {
    return YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ParseError(std::string(what) + ": " + e.what(), e.mark.line >= 0 ? static_cast<std::size_t>(e.mark.line) + 1 : 0);
  }
}

std::string scalar_text(const YAML::Node& node) {
  return trim(node.as<std::string>());
}

ProfileStage parse_stage(const YAML::Node& item) {
  ProfileStage stage;
  if (item.IsScalar()) {
    stage.name = scalar_text(item);
    if (!stage.name.empty() && stage.name.back() == ':') stage.name.pop_back();
    stage.name = trim(stage.name);
    return stage;
  }
  if (!item.IsMap() || item.size() != 1) {
    throw ParseError("each profile entry must be a single 'Stage:' item");
  }
  const auto entry = *item.begin();
  stage.name = scalar_text(entry.first);
  const YAML::Node& ttps = entry.second;
  if (ttps.IsNull()) return stage;
  if (!ttps.IsSequence()) {
    throw ParseError("TTPs of stage '" + stage.name + "' must be a list");
  }
  for (const auto& ttp : ttps) {
    if (!ttp.IsScalar()) throw ParseError("TTPs of stage '" + stage.name + "' must be plain text items");
    stage.ttps.push_back(scalar_text(ttp));
  }
  return stage;
}

}  // namespace

ThreatActorProfile parse_profile(std::string_view doc) {
  const YAML::Node root = load_yaml(expand_tabs(doc), "profile document");
  if (!root.IsMap() || !root["profile"]) throw ParseError("profile document has no 'profile' key");

  ThreatActorProfile profile;
  if (const YAML::Node desc = root["description"]; desc && desc.IsScalar()) {
    profile.description = trim(desc.as<std::string>());
  }

  YAML::Node list = root["profile"];
  if (list.IsScalar()) list = load_yaml(expand_tabs(list.as<std::string>()), "profile block");
  if (list.IsNull()) return profile;
  if (!list.IsSequence()) throw ParseError("'profile' must hold a list of kill-chain stages");

  std::set<std::string> seen;
  for (const auto& item : list) {
    ProfileStage stage = parse_stage(item);
    if (stage.name.empty()) throw ParseError("profile stage with an empty name");
    if (!seen.insert(to_lower(stage.name)).second) {
      throw ParseError("duplicate profile stage '" + stage.name + "'");
    }
    profile.stages.push_back(std::move(stage));
  }
  return profile;
}

ThreatActorProfile load_profile(const std::string& path) {
  try {
    return parse_profile(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError::in_file(path, e);
  }
}

namespace {

std::string indent_block(const std::string& text, std::string_view pad) {
  std::string out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    out += pad;
    out += line;
    out += '\n';
  }
  return out;
}

}  // namespace

std::string serialize_profile(const ThreatActorProfile& profile) {
  YAML::Emitter inner;
  inner << YAML::BeginSeq;
  for (const auto& stage : profile.stages) {
    inner << YAML::BeginMap << YAML::Key << stage.name << YAML::Value;
    if (stage.ttps.empty()) {
      inner << YAML::Null;
    } else {
      inner << YAML::BeginSeq;
      for (const auto& ttp : stage.ttps) inner << ttp;
      inner << YAML::EndSeq;
    }
    inner << YAML::EndMap;
  }
  inner << YAML::EndSeq;

  std::string out;
  if (profile.description) {
    YAML::Emitter desc;
    desc << YAML::BeginMap << YAML::Key << "description" << YAML::Value << *profile.description << YAML::EndMap;
    out += desc.c_str();
    out += '\n';
  }
  if (profile.stages.empty()) {
    out += "profile: []\n";
    return out;
  }
  out += "profile: |\n";
  out += indent_block(inner.c_str(), "  ");
  return out;
}

std::string_view to_string(CriteriaSetName name) noexcept {
  switch (name) {
    case CriteriaSetName::baseline: return "baseline";
    case CriteriaSetName::focused: return "focused";
    case CriteriaSetName::custom: return "custom";
  }
  return "custom";
}

CriteriaSet::CriteriaSet(CriteriaSetName name, std::vector<Criterion> criteria)
    : name_(name), criteria_(std::move(criteria)) {
  if (criteria_.empty()) throw ConfigError("criteria set is empty");
  std::set<std::string> ids;
  for (const auto& c : criteria_) {
    if (c.id.empty()) throw ConfigError("criterion with empty id");
    if (trim(c.text).empty()) throw ConfigError("criterion '" + c.id + "' has empty text");
    if (c.delta == 0) throw ConfigError("criterion '" + c.id + "' has a zero score delta");
    if (!ids.insert(c.id).second) throw ConfigError("duplicate criterion id '" + c.id + "'");
  }
}

int CriteriaSet::max_score() const noexcept {
  int sum = 0;
  for (const auto& c : criteria_) {
    if (c.delta > 0) sum += c.delta;
  }
  return sum;
}

int CriteriaSet::negative_sum() const noexcept {
  int sum = 0;
  for (const auto& c : criteria_) {
    if (c.delta < 0) sum += c.delta;
  }
  return sum;
}

const Criterion* CriteriaSet::find(std::string_view id) const noexcept {
  for (const auto& c : criteria_) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

std::size_t CriteriaSet::position(std::string_view id) const noexcept {
  for (std::size_t i = 0; i < criteria_.size(); ++i) {
    if (criteria_[i].id == id) return i;
  }
  return criteria_.size();
}

std::string slugify(std::string_view text) {
  std::string out;
  bool pending_sep = false;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      if (pending_sep && !out.empty()) out += '_';
      out += static_cast<char>(std::tolower(u));
      pending_sep = false;
    } else {
      pending_sep = true;
    }
  }
  return out;
}

namespace {

Criterion make(CriterionSource source, std::string text, int delta) {
  return Criterion{slugify(text), source, std::move(text), delta};
}

}  // namespace

CriteriaSet builtin_criteria(CriteriaSetName name) {
  constexpr auto ta = CriterionSource::ta_profile;
  constexpr auto other = CriterionSource::other;
  switch (name) {
    case CriteriaSetName::baseline:
      return CriteriaSet(name, {
          make(ta, "Initial Access observed", 1),
          make(ta, "Execution observed", 1),
          make(ta, "Persistence observed.", 1),
          make(ta, "Reconnaissance observed", 1),
          make(ta, "Privilege Escalation observed", 1),
          make(ta, "Defense Evasion observed", 1),
          make(ta, "Credential Access observed", 1),
          make(ta, "Lateral Movement observed", 1),
          make(ta, "Data Collection observed", 1),
          make(other, "Application has extensive permissions, can access sensitive resources", 1),
          make(other, "More than one stages of kill chain observed", 1),
          make(other, "All access attempts were unsuccessful and resulted in errors", -1),
          make(other, "Application lacks access sensitive resources", -1),
          make(other, "All the suspicious IP addresses are benign", -3),
          make(other, "All the suspicious IP addresses were linked to resources not considered high", -1),
      });
    case CriteriaSetName::focused:
      return CriteriaSet(name, {
          make(ta, "Unusual Access Attempt observed", 1),
          make(ta, "OAuth Abuse observed", 2),
          make(ta, "Data Collection Activities observed", 1),
          make(ta, "Use of Proxy Infrastructure observed", 1),
          make(other, "Application has extensive permissions, can access sensitive resources", 1),
          make(other, "More than one method of threat actor observed", 1),
          make(other, "A suspicious pattern of accessing sensitive resources observed", 1),
          make(other, "All access attempts were unsuccessful and resulted in errors", -1),
          make(other, "Application lacks access to sensitive resources", -1),
          make(other, "All the suspicious IP addresses are benign", -2),
          make(other, "All the suspicious IP addresses were linked to resources not considered high", -1),
      });
    case CriteriaSetName::custom:
      break;
  }
  throw ConfigError("no built-in criteria set named 'custom'");
}

CriteriaSet builtin_criteria(std::string_view name) {
  const std::string lower = to_lower(name);
  if (lower == "baseline") return builtin_criteria(CriteriaSetName::baseline);
  if (lower == "focused") return builtin_criteria(CriteriaSetName::focused);
  throw ConfigError("unknown criteria set '" + std::string(name) + "'");
}

CriteriaSet parse_criteria(std::string_view doc) {
  const YAML::Node root = load_yaml(doc, "criteria document");
  YAML::Node rows = root;
  if (root.IsMap()) rows = root["criteria"];
  if (!rows || !rows.IsSequence()) throw ParseError("criteria document must contain a list of criteria");

  std::vector<Criterion> criteria;
  std::size_t row_number = 0;
  for (const auto& row : rows) {
    ++row_number;
    const std::string where = "criteria row " + std::to_string(row_number);
    if (!row.IsMap()) throw ParseError(where + " is not a mapping");
    if (!row["text"] || !row["delta"]) throw ParseError(where + " needs 'text' and 'delta'");
    Criterion c;
    c.text = trim(row["text"].as<std::string>());
    try {
      c.delta = row["delta"].as<int>();
    } catch (const YAML::Exception&) {
      throw ParseError(where + ": 'delta' is not an integer");
    }
    c.id = row["id"] ? trim(row["id"].as<std::string>()) : slugify(c.text);
    const std::string source = row["source"] ? to_lower(row["source"].as<std::string>()) : "other";
    if (source == "ta_profile" || source == "ta profile" || source == "ta") {
      c.source = CriterionSource::ta_profile;
    } else if (source == "other") {
      c.source = CriterionSource::other;
    } else {
      throw ParseError(where + ": unknown source '" + source + "'");
    }
    criteria.push_back(std::move(c));
  }
  return CriteriaSet(CriteriaSetName::custom, std::move(criteria));
}

CriteriaSet load_criteria_file(const std::string& path) {
  try {
    return parse_criteria(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError::in_file(path, e);
  }
}

CriteriaSet resolve_criteria(const std::string& name_or_path) {
  const std::string lower = to_lower(name_or_path);
  if (lower == "baseline" || lower == "focused") return builtin_criteria(lower);
  if (!std::filesystem::exists(name_or_path)) {
    throw ConfigError("criteria '" + name_or_path + "' is neither a built-in set nor an existing file");
  }
  return load_criteria_file(name_or_path);
}

std::vector<std::string> render_guidances(const CriteriaSet& set) {
  std::vector<std::string> lines;
  lines.reserve(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    lines.push_back(std::to_string(i + 1) + ". " + set.criteria()[i].text);
  }
  return lines;
}

}  // namespace logtriage
