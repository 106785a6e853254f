#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "logtriage/reasoner.hpp"
#include "logtriage/reviewer.hpp"

namespace logtriage {

std::string invoke(const ReasonerBackend& backend, const PromptBundle& prompts) {
  std::string text = backend.complete(prompts);
  if (trim(text).empty()) throw EmptyResponse(backend.name() + " reasoner returned an empty response");
  return text;
}

MockReasoner::MockReasoner(MockOptions options) : options_(options) {
  if (!(options_.noise >= 0.0 && options_.noise < 1.0)) throw ConfigError("mock noise must be in [0, 1)");
}

std::string MockReasoner::complete(const PromptBundle& prompts) const {
  if (prompts.user_text.rfind(kReviewMarker, 0) == 0) return review_response(prompts);
  return triage_response(prompts);
}

namespace {

std::string join(const std::set<std::string>& items, std::string_view sep, std::string_view prefix = "") {
  std::string out;
  for (const auto& i : items) {
    if (!out.empty()) out += sep;
    out += prefix;
    out += i;
  }
  return out;
}

std::string behavior_summary(const Evidence& ev, const RuleVerdicts& rules) {
  std::set<std::string> types;
  std::set<std::string> ips;
  for (const auto& r : ev.records) {
    types.insert(std::string(to_string(r.log_type)));
    if (!r.ip.empty()) ips.insert(r.ip);
  }
  std::ostringstream out;
  out << "The application produced " << ev.records.size() << " log entries (" << join(types, ", ") << ") from "
      << ips.size() << " IP addresses.";
  std::set<std::string> sensitive;
  for (const auto& p : ev.enrichment.permissions) {
    if (p.sensitive) sensitive.insert(p.resource);
  }
  if (!ev.enrichment.permissions.empty()) {
    if (sensitive.empty()) {
      out << " None of its permissions cover sensitive resources.";
    } else {
      out << " It holds permissions on sensitive resources: " << join(sensitive, ", ") << ".";
    }
  }
  if (rules.untrusted_ips.empty()) {
    out << " All activity originates from known IP addresses.";
  } else {
    out << " Activity from IP addresses not known to be benign: " << join(rules.untrusted_ips, ", ") << ".";
  }
  return out.str();
}

std::vector<SuspiciousActivity> activities(const Evidence& ev, const RuleVerdicts& rules) {
  std::vector<SuspiciousActivity> out;
  std::set<std::string> named;
  for (const auto& f : rules.findings) {
    SuspiciousActivity a;
    a.stage = std::string(stage_name(f.stage));
    std::set<std::string> ops;
    for (std::size_t row : f.rows) ops.insert(ev.records[row].operation);
    a.evidence = std::to_string(f.rows.size()) + " event(s) matching the stage signature (" + join(ops, ", ") +
                 ") from " + join(f.ips, ", ", "IP ") + ".";
    for (const auto& ip : f.ips) {
      a.entities.push_back("IP " + ip);
      named.insert(ip);
    }
    for (const auto& r : f.resources) a.entities.push_back(r);
    a.dates.assign(f.dates.begin(), f.dates.end());
    out.push_back(std::move(a));
  }
  std::set<std::string> rest;
  for (const auto& ip : rules.flagged_ips) {
    if (named.count(ip) == 0) rest.insert(ip);
  }
  if (!rest.empty()) {
    SuspiciousActivity a;
    a.stage = "Other flagged activity";
    std::set<std::string> dates;
    std::size_t failures = 0;
    for (const auto& r : ev.records) {
      if (rest.count(r.ip) == 0) continue;
      dates.insert(format_date(r.ts));
      if (!is_success(r.result_code)) ++failures;
    }
    a.evidence = std::to_string(failures) + " failed request(s) or proxy use from " + join(rest, ", ", "IP ") + ".";
    for (const auto& ip : rest) a.entities.push_back("IP " + ip);
    a.dates.assign(dates.begin(), dates.end());
    out.push_back(std::move(a));
  }
  return out;
}

std::string tag(bool v) {
  return v ? "[True]" : "[False]";
}

struct TaggedLine {
  std::size_t number = 0;
  std::string text;
  std::optional<bool> tag;
};

std::vector<TaggedLine> numbered_lines(std::string_view body) {
  std::vector<TaggedLine> out;
  std::istringstream in{std::string(body)};
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    const auto dot = t.find(". ");
    if (dot == std::string::npos || dot == 0) continue;
    const std::string digits = t.substr(0, dot);
    if (!std::all_of(digits.begin(), digits.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      continue;
    }
    TaggedLine l;
    l.number = std::stoul(digits);
    l.text = t.substr(dot + 2);
    const std::string lower = to_lower(l.text);
    if (const auto p = lower.rfind("[true]"); p != std::string::npos) {
      l.tag = true;
      l.text = trim(l.text.substr(0, p));
    } else if (const auto q = lower.rfind("[false]"); q != std::string::npos) {
      l.tag = false;
      l.text = trim(l.text.substr(0, q));
    }
    out.push_back(std::move(l));
  }
  return out;
}

}  // namespace

std::string MockReasoner::triage_response(const PromptBundle& prompts) const {
  const Evidence ev = parse_prompt_evidence(prompts.user_text);
  const RuleVerdicts rules = evaluate_rules(ev);
  const auto guidances = parse_prompt_guidances(prompts.user_text);

  Rng rng(derive_seed(options_.seed, "mock", fnv1a64(prompts.user_text)));

  std::ostringstream out;
  out << "# " << kBehaviorHeading << "\n" << behavior_summary(ev, rules) << "\n\n";
  out << "# " << kActivitiesHeading << "\n";
  const auto acts = activities(ev, rules);
  if (acts.empty()) out << "No suspicious activities were identified.\n";
  for (const auto& a : acts) {
    out << "\n## " << a.stage << "\n- Evidence: " << a.evidence << "\n- Entities: ";
    for (std::size_t i = 0; i < a.entities.size(); ++i) out << (i ? ", " : "") << a.entities[i];
    out << "\n- Dates: ";
    for (std::size_t i = 0; i < a.dates.size(); ++i) out << (i ? ", " : "") << a.dates[i];
    out << "\n";
  }
  out << "\n# " << kTriageHeading << "\n";
  for (std::size_t i = 0; i < guidances.size(); ++i) {
    bool v = rules.verdict_for(slugify(guidances[i])).value_or(false);
    if (options_.noise > 0.0 && rng.bernoulli(options_.noise)) v = !v;
    out << (i + 1) << ". " << guidances[i] << " " << tag(v) << "\n";
  }
  return out.str();
}

// Review answers are computed without noise: the review context is small and
// quotes exactly the evidence each disputed item depends on.
std::string MockReasoner::review_response(const PromptBundle& prompts) const {
  const std::string& text = prompts.user_text;
  const auto disputed = numbered_lines(markdown_section(text, kReviewDisputedHeading));
  const auto related = numbered_lines(markdown_section(text, kReviewRelatedHeading));
  const auto named = split(trim(markdown_section(text, kReviewNamedIpsHeading)), ',');
  const Evidence ev = parse_prompt_evidence(text);
  const RuleVerdicts rules = evaluate_rules(ev);

  std::ostringstream out;
  out << "# " << kReviewRevisedItemsHeading << "\n";
  for (const auto& item : disputed) {
    const std::string id = slugify(item.text);
    bool v = false;
    if (id == criterion_ids::kMultipleStages || id == criterion_ids::kMultipleMethods) {
      const auto n = std::count_if(related.begin(), related.end(), [](const TaggedLine& l) { return l.tag.value_or(false); });
      v = n >= 2;
    } else if (id == criterion_ids::kAllIpsBenign) {
      v = true;
      bool any = false;
      for (const auto& raw : named) {
        const std::string ip = trim(raw);
        if (ip.empty()) continue;
        any = true;
        const IpDetail* d = ev.enrichment.find_ip(ip);
        if (d == nullptr || !d->is_benign_known) v = false;
      }
      if (!any) v = rules.all_flagged_ips_benign;
    } else {
      v = rules.verdict_for(id).value_or(item.tag.value_or(false));
    }
    out << item.number << ". " << item.text << " " << tag(v) << "\n";
  }
  if (text.find(kReviewBehaviorRequest) != std::string::npos) {
    out << "\n# " << kReviewRevisedBehaviorHeading << "\n" << behavior_summary(ev, rules) << "\n";
  }
  return out.str();
}

}  // namespace logtriage
