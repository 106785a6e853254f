#include "logtriage/reviewer.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <regex>
#include <set>
#include <sstream>

namespace logtriage {

std::vector<ReviewRule> parse_review_rules(std::string_view doc) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(doc));
  } catch (const YAML::Exception& e) {
    throw ParseError(std::string("review rules: ") + e.what(), e.mark.line >= 0 ? e.mark.line + 1 : 0);
  }
  if (root.IsMap() && root["rules"]) root = root["rules"];
  if (root.IsNull()) return {};
  if (!root.IsSequence()) throw ParseError("review rules must be a list");

  std::vector<ReviewRule> rules;
  std::set<std::string> ids;
  auto text = [](const YAML::Node& n) { return n ? trim(n.as<std::string>()) : std::string(); };
  for (const auto& node : root) {
    if (!node.IsMap()) throw ParseError("review rule is not a mapping");
    ReviewRule r;
    r.id = text(node["id"]);
    if (r.id.empty()) throw ParseError("review rule without an id");
    if (!ids.insert(r.id).second) throw ParseError("duplicate review rule '" + r.id + "'");
    const std::string kind = to_lower(text(node["kind"]));
    if (kind == "code") {
      r.kind = RuleKind::code;
    } else if (kind == "check") {
      r.kind = RuleKind::check;
    } else {
      throw ParseError("review rule '" + r.id + "' has unknown kind '" + kind + "'");
    }
    r.description = text(node["description"]);
    r.pattern = text(node["pattern"]);
    r.when = text(node["when"]);
    r.prompt_template = text(node["template"]);
    r.always = node["always"] && node["always"].as<bool>();
    if (r.kind == RuleKind::code) {
      if (r.pattern.empty()) throw ParseError("code rule '" + r.id + "' needs a pattern");
      try {
        std::regex(r.pattern, std::regex::icase);
      } catch (const std::regex_error& e) {
        throw ParseError("code rule '" + r.id + "' has an invalid pattern: " + e.what());
      }
    } else if (r.prompt_template.empty()) {
      throw ParseError("check rule '" + r.id + "' needs a template");
    }
    rules.push_back(std::move(r));
  }
  return rules;
}

std::vector<ReviewRule> load_review_rules(const std::string& path) {
  try {
    return parse_review_rules(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError::in_file(path, e);
  }
}

std::string markdown_section(std::string_view text, std::string_view name) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::string out;
  bool inside = false;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0) {
      if (inside) break;
      inside = trim(line.substr(2)) == name;
      continue;
    }
    if (inside) out += line + "\n";
  }
  return out;
}

std::vector<std::string> named_ips(const TriageReport& report) {
  static const std::regex kToken(R"([0-9A-Fa-f:.]+)");
  std::set<std::string> ips;
  auto scan = [&](const std::string& text) {
    for (auto it = std::sregex_iterator(text.begin(), text.end(), kToken); it != std::sregex_iterator(); ++it) {
      std::string t = it->str();
      while (!t.empty() && (t.back() == '.' || t.back() == ':')) t.pop_back();
      if (t.find_first_of(".:") != std::string::npos && is_valid_ip(t)) ips.insert(t);
    }
  };
  for (const auto& a : report.suspicious_activities) {
    scan(a.evidence);
    for (const auto& e : a.entities) scan(e);
  }
  return {ips.begin(), ips.end()};
}

namespace {

std::string item_ref(const CriteriaSet& set, std::string_view id) {
  return "item " + std::to_string(set.position(id) + 1);
}

const Criterion* multi_criterion(const CriteriaSet& set) {
  if (const Criterion* c = set.find(criterion_ids::kMultipleStages)) return c;
  return set.find(criterion_ids::kMultipleMethods);
}

std::vector<const Criterion*> ta_criteria(const CriteriaSet& set) {
  std::vector<const Criterion*> out;
  for (const auto& c : set.criteria()) {
    if (c.source == CriterionSource::ta_profile) out.push_back(&c);
  }
  return out;
}

std::set<std::string> sensitive_permission_resources(const EnrichmentBundle& e) {
  std::set<std::string> out;
  for (const auto& p : e.permissions) {
    if (p.sensitive) out.insert(p.resource);
  }
  return out;
}

std::string activities_text(const TriageReport& report) {
  std::string out;
  for (const auto& a : report.suspicious_activities) {
    out += a.stage + "\n" + a.evidence + "\n";
    for (const auto& e : a.entities) out += e + "\n";
  }
  return out;
}

}  // namespace

std::vector<Violation> run_codes(const TriageReport& report, const EnrichmentBundle& enrichment, const CriteriaSet& set,
                                 const std::vector<ReviewRule>& extra) {
  std::vector<Violation> out;
  const VerdictMap& verdicts = report.verdicts;

  // (a) every guidance line carries a tag
  {
    Violation v{std::string(review_codes::kTags), "", {}, false};
    for (const auto& c : set.criteria()) {
      const Verdict* verdict = verdicts.find(c.id);
      if (verdict == nullptr || !verdict->tagged) {
        v.criteria.push_back(c.id);
        v.detail += (v.detail.empty() ? "untagged: " : ", ") + item_ref(set, c.id);
      }
    }
    if (!v.criteria.empty()) out.push_back(std::move(v));
  }

  // (b) the multi-stage verdict agrees with the stage verdicts
  if (const Criterion* multi = multi_criterion(set)) {
    const Verdict* mv = verdicts.find(multi->id);
    if (mv != nullptr && mv->tagged) {
      std::vector<std::string> on;
      for (const Criterion* c : ta_criteria(set)) {
        const Verdict* v = verdicts.find(c->id);
        if (v != nullptr && v->tagged && v->value) on.push_back(item_ref(set, c->id));
      }
      const bool expected = on.size() >= 2;
      if (mv->value != expected) {
        std::string detail = item_ref(set, multi->id) + " is " + (mv->value ? "True" : "False") + " but " +
                             std::to_string(on.size()) + " stage item(s) are True";
        for (std::size_t i = 0; i < on.size(); ++i) detail += (i ? ", " : " (") + on[i];
        if (!on.empty()) detail += ")";
        out.push_back(Violation{std::string(review_codes::kMultiStage), detail, {multi->id}, false});
      }
    }
  }

  // (c) the all-benign verdict agrees with the ips named as suspicious
  if (const Criterion* benign = set.find(criterion_ids::kAllIpsBenign)) {
    const Verdict* bv = verdicts.find(benign->id);
    const auto ips = named_ips(report);
    if (bv != nullptr && bv->tagged && !ips.empty()) {
      std::vector<std::string> not_benign;
      for (const auto& ip : ips) {
        const IpDetail* d = enrichment.find_ip(ip);
        if (d == nullptr || !d->is_benign_known) not_benign.push_back(ip);
      }
      const bool expected = not_benign.empty();
      if (bv->value != expected) {
        std::string detail = item_ref(set, benign->id) + " is " + (bv->value ? "True" : "False") + " but ";
        if (expected) {
          detail += "every named ip is known benign";
        } else {
          detail += "named ip(s) not known benign:";
          for (const auto& ip : not_benign) detail += " " + ip;
        }
        out.push_back(Violation{std::string(review_codes::kIpBenign), detail, {benign->id}, false});
      }
    }
  }

  // (d) sensitive permissions are named in the behavior summary
  if (const auto sensitive = sensitive_permission_resources(enrichment); !sensitive.empty()) {
    const bool mentioned = std::any_of(sensitive.begin(), sensitive.end(), [&](const std::string& r) {
      return contains_icase(report.behavior_summary, r);
    });
    if (!mentioned) {
      std::string detail = "behavior summary names none of:";
      for (const auto& r : sensitive) detail += " " + r;
      out.push_back(Violation{std::string(review_codes::kSensitiveMention), detail, {}, true});
    }
  }

  const std::string text = report.behavior_summary + "\n" + activities_text(report);
  for (const auto& rule : extra) {
    if (rule.kind != RuleKind::code) continue;
    if (!rule.when.empty()) {
      const Verdict* v = verdicts.find(rule.when);
      if (v == nullptr || !v->value) continue;
    }
    if (!std::regex_search(text, std::regex(rule.pattern, std::regex::icase))) {
      Violation v{rule.id, rule.description.empty() ? "pattern not found: " + rule.pattern : rule.description, {}, true};
      if (!rule.when.empty() && set.find(rule.when) != nullptr) v.criteria.push_back(rule.when);
      out.push_back(std::move(v));
    }
  }

  std::sort(out.begin(), out.end());
  return out;
}

namespace {

std::string tagged_line(const CriteriaSet& set, const Verdict* v, const Criterion& c) {
  std::string line = std::to_string(set.position(c.id) + 1) + ". " + c.text;
  if (v != nullptr && v->tagged) line += v->value ? " [True]" : " [False]";
  return line;
}

}  // namespace

PromptBundle build_review_prompt(const TriageReport& report, const std::vector<Violation>& violations,
                                 const CriteriaSet& set, const ReviewEvidence& evidence,
                                 const std::vector<ReviewRule>& rules) {
  std::set<std::string> disputed;
  bool behavior = false;
  bool multi = false;
  bool ips = false;
  bool logs = false;
  for (const auto& v : violations) {
    disputed.insert(v.criteria.begin(), v.criteria.end());
    behavior = behavior || v.behavior;
    if (v.rule_id == review_codes::kMultiStage) {
      multi = true;
    } else if (v.rule_id == review_codes::kIpBenign) {
      ips = true;
    } else if (!v.criteria.empty()) {
      logs = true;
    }
  }

  std::ostringstream out;
  out << kReviewMarker << "\n";
  out << "Some items of your triage report need a second look. Re-evaluate only the items listed under '# "
      << kReviewDisputedHeading << "' using the evidence below. Answer with a '# " << kReviewRevisedItemsHeading
      << "' section that repeats each item with its number and ends it with [True] or [False].\n";
  if (behavior) {
    out << kReviewBehaviorRequest << " in a '# " << kReviewRevisedBehaviorHeading
        << "' section; it must name the sensitive resources the application can access.\n";
  }
  for (const auto& r : rules) {
    if (r.kind == RuleKind::check) out << r.prompt_template << "\n";
  }

  out << "\n# " << kReviewProblemsHeading << "\n";
  for (const auto& v : violations) out << "- " << v.rule_id << ": " << v.detail << "\n";

  out << "\n# " << kReviewDisputedHeading << "\n";
  for (const auto& c : set.criteria()) {
    if (disputed.count(c.id) != 0) out << tagged_line(set, report.verdicts.find(c.id), c) << "\n";
  }

  if (multi) {
    out << "\n# " << kReviewRelatedHeading << "\n";
    for (const Criterion* c : ta_criteria(set)) out << tagged_line(set, report.verdicts.find(c->id), *c) << "\n";
  }

  const EnrichmentBundle empty;
  const EnrichmentBundle& enrichment = evidence.enrichment ? *evidence.enrichment : empty;
  const std::vector<LogRecord> no_records;
  const std::vector<LogRecord>& records = evidence.records ? *evidence.records : no_records;

  if (ips) {
    const auto named = named_ips(report);
    out << "\n# " << kReviewNamedIpsHeading << "\n";
    for (std::size_t i = 0; i < named.size(); ++i) out << (i ? ", " : "") << named[i];
    out << "\n";
    std::vector<IpDetail> rows;
    for (const auto& ip : named) {
      if (const IpDetail* d = enrichment.find_ip(ip)) rows.push_back(*d);
    }
    out << "\n# Enrichment Data\n" << render_ip_table(rows);
  } else if (logs || behavior) {
    out << "\n" << render_log_section(records) << "\n" << render_enrichment_section(enrichment, records);
  }

  PromptBundle bundle;
  bundle.system_text = system_prompt();
  bundle.user_text = out.str();
  bundle.token_estimate = estimate_tokens(bundle.system_text) + estimate_tokens(bundle.user_text);
  return bundle;
}

TriageReport run_checks(const TriageReport& report, const std::vector<Violation>& violations,
                        const ReasonerBackend& backend, const CriteriaSet& set, const ReviewEvidence& evidence,
                        const ReviewConfig& config) {
  if (violations.empty() && !config.force) return report;

  std::vector<Violation> disputes = violations;
  if (disputes.empty()) {
    Violation all{"forced", "unconditional review pass", {}, false};
    for (const auto& c : set.criteria()) all.criteria.push_back(c.id);
    disputes.push_back(std::move(all));
  }

  const PromptBundle prompt = build_review_prompt(report, disputes, set, evidence, config.rules);
  const std::string response = invoke(backend, prompt);

  std::vector<const Criterion*> candidates;
  for (const auto& v : disputes) {
    for (const auto& id : v.criteria) {
      const Criterion* c = set.find(id);
      if (c != nullptr && std::find(candidates.begin(), candidates.end(), c) == candidates.end()) {
        candidates.push_back(c);
      }
    }
  }

  TriageReport revised = report;
  for (const auto& v : parse_verdict_lines(markdown_section(response, kReviewRevisedItemsHeading), candidates)) {
    revised.verdicts.set(v.criterion_id, v.value);
    revised.verdicts.find(v.criterion_id)->raw_line = v.raw_line;
  }
  if (const std::string behavior = trim(markdown_section(response, kReviewRevisedBehaviorHeading)); !behavior.empty()) {
    revised.behavior_summary = behavior;
  }
  return revised;
}

ReviewOutcome review(const TriageReport& report, const CriteriaSet& set, const ReasonerBackend& backend,
                     const ReviewEvidence& evidence, const ReviewConfig& config) {
  const EnrichmentBundle empty;
  const EnrichmentBundle& enrichment = evidence.enrichment ? *evidence.enrichment : empty;

  ReviewOutcome outcome;
  outcome.violations = run_codes(report, enrichment, set, config.rules);
  outcome.report = report;
  outcome.remaining = outcome.violations;

  bool forced = config.force || std::any_of(config.rules.begin(), config.rules.end(), [](const ReviewRule& r) {
                  return r.kind == RuleKind::check && r.always;
                });
  while ((!outcome.remaining.empty() || forced) && outcome.review_invocations < config.max_rounds) {
    ReviewConfig round = config;
    round.force = forced;
    outcome.report = run_checks(outcome.report, outcome.remaining, backend, set, evidence, round);
    ++outcome.review_invocations;
    forced = false;
    outcome.remaining = run_codes(outcome.report, enrichment, set, config.rules);
  }

  outcome.unresolved = !outcome.remaining.empty();
  outcome.corrected_verdicts = outcome.unresolved ? report.verdicts : outcome.report.verdicts;
  return outcome;
}

}  // namespace logtriage
