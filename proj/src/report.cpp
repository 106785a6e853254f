#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "logtriage/reasoner.hpp"

namespace logtriage {

const Verdict* VerdictMap::find(std::string_view id) const noexcept {
  for (const auto& v : entries_) {
    if (v.criterion_id == id) return &v;
  }
  return nullptr;
}

Verdict* VerdictMap::find(std::string_view id) noexcept {
  for (auto& v : entries_) {
    if (v.criterion_id == id) return &v;
  }
  return nullptr;
}

bool VerdictMap::value(std::string_view id) const {
  const Verdict* v = find(id);
  if (v == nullptr) throw ConfigError("no verdict for criterion '" + std::string(id) + "'");
  return v->value;
}

void VerdictMap::set(std::string_view id, bool value) {
  Verdict* v = find(id);
  if (v == nullptr) throw ConfigError("no verdict for criterion '" + std::string(id) + "'");
  v->value = value;
  v->tagged = true;
}

bool VerdictMap::matches(const CriteriaSet& set) const noexcept {
  if (entries_.size() != set.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].criterion_id != set.criteria()[i].id) return false;
  }
  return true;
}

bool VerdictMap::all_tagged() const noexcept {
  return std::all_of(entries_.begin(), entries_.end(), [](const Verdict& v) { return v.tagged; });
}

bool VerdictMap::operator==(const VerdictMap& other) const noexcept {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.criterion_id != b.criterion_id || a.value != b.value || a.tagged != b.tagged) return false;
  }
  return true;
}

VerdictMap make_verdicts(const CriteriaSet& set, const std::vector<bool>& values) {
  if (values.size() != set.size()) throw ConfigError("make_verdicts: value count differs from criteria count");
  std::vector<Verdict> entries;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& c = set.criteria()[i];
    entries.push_back(Verdict{c.id, values[i], true, i + 1, c.text + (values[i] ? " [True]" : " [False]")});
  }
  return VerdictMap(std::move(entries));
}

namespace {

const std::set<std::string>& stopwords() {
  static const std::set<std::string> words = {"a",   "an",  "the", "and",  "or",   "of",  "to",   "in",
                                              "is",  "are", "was", "were", "be",   "been", "with", "by",
                                              "for", "on",  "at",  "that", "this", "it",  "has",  "have",
                                              "had", "can", "did", "does", "do",   "its", "as",   "from"};
  return words;
}

std::string stem(std::string token) {
  if (token.size() <= 3) return token;
  auto ends = [&](std::string_view suffix) {
    return token.size() > suffix.size() && token.compare(token.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends("sses")) {
    token.resize(token.size() - 2);
  } else if (ends("ies")) {
    token.resize(token.size() - 3);
    token += 'y';
  } else if (ends("ss") || ends("us")) {
    return token;
  } else if (ends("s")) {
    token.pop_back();
  }
  return token;
}

std::set<std::string> tokens(std::string_view text) {
  std::set<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty() && stopwords().count(cur) == 0) out.insert(stem(cur));
    cur.clear();
  };
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      cur += static_cast<char>(std::tolower(u));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

std::size_t overlap(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::size_t n = 0;
  for (const auto& t : a) n += b.count(t);
  return n;
}

constexpr double kMatchThreshold = 0.6;

struct ItemLine {
  std::size_t position = 0;  // 1-based order within the section
  std::size_t number = 0;    // the number written on the line, 0 for bullets
  std::string text;          // without number and tag
  std::optional<bool> tag;
  std::string raw;
};

// Strips a leading "12." / "12)" / "-" / "*" marker. Returns false when the
// line carries none.
bool strip_item_marker(std::string& line, std::size_t& number) {
  std::size_t i = 0;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')')) {
    number = static_cast<std::size_t>(std::stoul(line.substr(0, i)));
    line = trim(line.substr(i + 1));
    return true;
  }
  if (!line.empty() && (line[0] == '-' || line[0] == '*') && line.size() > 1 && line[1] == ' ') {
    number = 0;
    line = trim(line.substr(2));
    return true;
  }
  return false;
}

std::optional<bool> strip_tag(std::string& text) {
  const std::string lower = to_lower(text);
  const auto t = lower.rfind("[true]");
  const auto f = lower.rfind("[false]");
  std::size_t pos = std::string::npos;
  std::optional<bool> tag;
  if (t != std::string::npos && (f == std::string::npos || t > f)) {
    pos = t;
    tag = true;
  } else if (f != std::string::npos) {
    pos = f;
    tag = false;
  }
  if (!tag) return std::nullopt;
  text = trim(text.substr(0, pos));
  while (!text.empty() && (text.back() == '*' || text.back() == ':')) text.pop_back();
  text = trim(text);
  return tag;
}

std::vector<ItemLine> item_lines(std::string_view section) {
  std::vector<ItemLine> out;
  std::istringstream in{std::string(section)};
  std::string line;
  while (std::getline(in, line)) {
    std::string text = trim(line);
    std::size_t number = 0;
    if (!strip_item_marker(text, number)) continue;
    ItemLine item;
    item.position = out.size() + 1;
    item.number = number;
    item.raw = trim(line);
    item.tag = strip_tag(text);
    item.text = text;
    out.push_back(std::move(item));
  }
  return out;
}

struct Match {
  std::size_t criterion = 0;
  std::size_t line = 0;
  double score = 0.0;
  double reverse = 0.0;
  std::size_t distance = 0;
};

// Greedy one-to-one assignment by similarity, then reverse coverage, then how
// close the written item number is to the criterion's position.
std::vector<std::optional<std::size_t>> assign(const std::vector<const Criterion*>& criteria,
                                               const std::vector<std::size_t>& positions,
                                               const std::vector<ItemLine>& lines) {
  std::vector<std::set<std::string>> line_tokens;
  for (const auto& l : lines) line_tokens.push_back(tokens(l.text));

  std::vector<Match> candidates;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    const auto ct = tokens(criteria[c]->text);
    if (ct.empty()) continue;
    for (std::size_t l = 0; l < lines.size(); ++l) {
      const std::size_t common = overlap(ct, line_tokens[l]);
      const double score = static_cast<double>(common) / static_cast<double>(ct.size());
      if (score < kMatchThreshold) continue;
      const double reverse =
          line_tokens[l].empty() ? 0.0 : static_cast<double>(common) / static_cast<double>(line_tokens[l].size());
      const std::size_t number = lines[l].number ? lines[l].number : lines[l].position;
      const std::size_t distance = number > positions[c] ? number - positions[c] : positions[c] - number;
      candidates.push_back({c, l, score, reverse, distance});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Match& a, const Match& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.reverse != b.reverse) return a.reverse > b.reverse;
    if (a.distance != b.distance) return a.distance < b.distance;
    if (a.line != b.line) return a.line < b.line;
    return a.criterion < b.criterion;
  });

  std::vector<std::optional<std::size_t>> chosen(criteria.size());
  std::vector<bool> used(lines.size(), false);
  for (const auto& m : candidates) {
    if (chosen[m.criterion] || used[m.line]) continue;
    chosen[m.criterion] = m.line;
    used[m.line] = true;
  }
  return chosen;
}

std::string heading_key(std::string_view line) {
  std::string t = trim(line);
  std::size_t i = 0;
  while (i < t.size() && (t[i] == '#' || t[i] == '*' || t[i] == '_' || t[i] == ' ')) ++i;
  return slugify(t.substr(i));
}

enum class SectionId { behavior, activities, triage };

std::optional<SectionId> heading_of(std::string_view line) {
  const std::string t = trim(line);
  if (t.empty() || t.size() > 90) return std::nullopt;
  const std::string key = heading_key(t);
  auto is = [&](std::string_view heading) {
    const std::string h = slugify(heading);
    return key == h || (key.rfind(h + "_", 0) == 0 && key.size() <= h.size() + 12);
  };
  if (is(kBehaviorHeading)) return SectionId::behavior;
  if (is(kActivitiesHeading)) return SectionId::activities;
  if (is(kTriageHeading)) return SectionId::triage;
  return std::nullopt;
}

std::string strip_markup(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c != '*' && c != '`' && c != '#') out += c;
  }
  return trim(out);
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& part : split(text, ',')) {
    std::string p = strip_markup(part);
    if (!p.empty()) out.push_back(p);
  }
  return out;
}

std::vector<SuspiciousActivity> parse_activities(std::string_view section) {
  std::vector<SuspiciousActivity> out;
  std::istringstream in{std::string(section)};
  std::string line;
  SuspiciousActivity* current = nullptr;
  while (std::getline(in, line)) {
    std::string text = trim(line);
    if (text.empty()) continue;
    std::size_t number = 0;
    const bool item = strip_item_marker(text, number);
    const std::string plain = strip_markup(text);
    const std::string lower = to_lower(plain);
    auto field = [&](std::string_view name) -> std::optional<std::string> {
      if (lower.rfind(name, 0) != 0) return std::nullopt;
      std::string rest = trim(plain.substr(name.size()));
      if (!rest.empty() && rest[0] == ':') rest = trim(rest.substr(1));
      return rest;
    };
    if (current != nullptr && item) {
      if (auto v = field("evidence")) {
        current->evidence = *v;
        continue;
      }
      if (auto v = field("entities")) {
        current->entities = split_list(*v);
        continue;
      }
      if (auto v = field("dates")) {
        current->dates = split_list(*v);
        continue;
      }
    }
    const bool header = text.rfind("#", 0) == 0 || text.rfind("**", 0) == 0 ||
                        stage_from_name(plain.back() == ':' ? plain.substr(0, plain.size() - 1) : plain).has_value();
    if (!item && header && plain.size() <= 80) {
      std::string name = plain;
      if (!name.empty() && name.back() == ':') name.pop_back();
      out.push_back(SuspiciousActivity{trim(name), "", {}, {}});
      current = &out.back();
    }
  }
  return out;
}

}  // namespace

double criterion_similarity(std::string_view line, std::string_view criterion_text) {
  const auto ct = tokens(criterion_text);
  if (ct.empty()) return 0.0;
  return static_cast<double>(overlap(ct, tokens(line))) / static_cast<double>(ct.size());
}

TriageReport parse_report(std::string_view raw, const CriteriaSet& set, const ReportParseOptions& options) {
  if (trim(raw).empty()) throw ReportParseError(ReportErrorKind::empty, "reasoner response is empty");

  std::string sections[3];
  bool found[3] = {false, false, false};
  std::optional<SectionId> current;
  std::istringstream in{std::string(raw)};
  std::string line;
  while (std::getline(in, line)) {
    if (auto h = heading_of(line)) {
      current = h;
      found[static_cast<int>(*h)] = true;
      continue;
    }
    if (current) sections[static_cast<int>(*current)] += line + "\n";
  }
  constexpr std::string_view kNames[] = {kBehaviorHeading, kActivitiesHeading, kTriageHeading};
  for (int i = 0; i < 3; ++i) {
    if (!found[i]) {
      throw ReportParseError(ReportErrorKind::missing_section, "report has no '" + std::string(kNames[i]) + "' section");
    }
  }

  TriageReport report;
  report.raw_response = std::string(raw);
  report.behavior_summary = trim(sections[0]);
  report.suspicious_activities = parse_activities(sections[1]);

  const auto lines = item_lines(sections[2]);
  std::vector<const Criterion*> criteria;
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < set.size(); ++i) {
    criteria.push_back(&set.criteria()[i]);
    positions.push_back(i + 1);
  }
  const auto chosen = assign(criteria, positions, lines);

  std::vector<bool> used(lines.size(), false);
  std::vector<Verdict> entries;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    if (!chosen[c]) {
      throw ReportParseError(ReportErrorKind::unmatched_criterion,
                             "no triage line matches criterion " + std::to_string(c + 1) + " '" + criteria[c]->text +
                                 "'");
    }
    const ItemLine& l = lines[*chosen[c]];
    used[*chosen[c]] = true;
    if (!l.tag && !options.allow_missing_tags) {
      throw ReportParseError(ReportErrorKind::missing_tag,
                             "triage line " + std::to_string(l.position) + " has no [True]/[False] tag: " + l.raw);
    }
    entries.push_back(Verdict{criteria[c]->id, l.tag.value_or(false), l.tag.has_value(), l.number ? l.number : l.position,
                              l.raw});
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!used[i] && lines[i].tag) {
      throw ReportParseError(ReportErrorKind::unmatched_line,
                             "triage line " + std::to_string(lines[i].position) + " matches no criterion: " + lines[i].raw);
    }
  }
  report.verdicts = VerdictMap(std::move(entries));
  return report;
}

std::vector<Verdict> parse_verdict_lines(std::string_view text, const std::vector<const Criterion*>& candidates) {
  std::vector<ItemLine> lines;
  for (auto& l : item_lines(text)) {
    if (l.tag) lines.push_back(std::move(l));
  }
  std::vector<std::size_t> positions(candidates.size(), 0);
  const auto chosen = assign(candidates, positions, lines);
  std::vector<Verdict> out;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (!chosen[c]) continue;
    const ItemLine& l = lines[*chosen[c]];
    out.push_back(Verdict{candidates[c]->id, *l.tag, true, l.number, l.raw});
  }
  return out;
}

std::string render_report(const TriageReport& report, const CriteriaSet& set) {
  std::string out = "# " + std::string(kBehaviorHeading) + "\n";
  out += report.behavior_summary.empty() ? "No behavior summary was produced." : report.behavior_summary;
  out += "\n\n# " + std::string(kActivitiesHeading) + "\n";
  if (report.suspicious_activities.empty()) out += "No suspicious activities were identified.\n";
  for (const auto& a : report.suspicious_activities) {
    out += "\n## " + a.stage + "\n";
    out += "- Evidence: " + a.evidence + "\n";
    std::string entities;
    for (const auto& e : a.entities) entities += (entities.empty() ? "" : ", ") + e;
    out += "- Entities: " + entities + "\n";
    std::string dates;
    for (const auto& d : a.dates) dates += (dates.empty() ? "" : ", ") + d;
    out += "- Dates: " + dates + "\n";
  }
  out += "\n# " + std::string(kTriageHeading) + "\n";
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& c = set.criteria()[i];
    out += std::to_string(i + 1) + ". " + c.text;
    if (const Verdict* v = report.verdicts.find(c.id); v != nullptr && v->tagged) {
      out += v->value ? " [True]" : " [False]";
    }
    out += '\n';
  }
  return out;
}

}  // namespace logtriage
