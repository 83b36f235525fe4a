#include "notamkit/notam_policy.hpp"

#include <algorithm>
#include <set>

#include "notamkit/error.hpp"
#include "text_util.hpp"

namespace notamkit {

namespace {

std::string designator_of(const std::string& runway) {
  const std::string r = normalize_runway(runway);
  if (r.rfind("RWY ", 0) == 0) return r.substr(4);
  if (r.rfind("RUNWAY ", 0) == 0) return r.substr(7);
  return r;
}

std::set<std::string> text_designators(const std::string& body) {
  std::set<std::string> out;
  for (const auto& seg : find_runway_designators(body)) {
    try {
      for (auto& d : expand_runway_designators(seg)) out.insert(std::move(d));
    } catch (const NotARunwayToken&) {
    }
  }
  return out;
}

struct NoticeView {
  std::optional<Notam> notam;
  std::string body;  // uppercased, whitespace-normalized
};

NoticeView view_of(const std::string& text) {
  NoticeView v;
  try {
    v.notam = parse_notam(text);
    v.body = normalize_whitespace(detail::to_upper(v.notam->body));
  } catch (const Error&) {
    v.body = normalize_whitespace(detail::to_upper(text));
  }
  return v;
}

// Field values the rule baseline reads off the notice.
StructuredRecord rule_values(const NoticeView& v, const RuleSet& rules) {
  if (v.notam) {
    const auto recs = extract_records(*v.notam, rules);
    if (!recs.empty()) return recs.front();
  }
  RecordDraft d;
  d.airport = v.notam && v.notam->location ? *v.notam->location : "";
  d.context = v.body;
  d.affect_actype = extract_actype(v.body);
  return apply_defaults(d, rules);
}

double fraction(std::size_t hits, std::size_t total) {
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

PolicyInput make_notam_input(const Notam& notam, const KnowledgeBundle& bundle,
                             std::vector<std::string> candidates, std::string id) {
  PolicyInput in;
  in.id = id.empty() ? notam.id : std::move(id);
  in.text = serialize_notam(notam);
  in.knowledge = bundle.lines();
  in.candidates = std::move(candidates);
  return in;
}

std::vector<std::string> knowledge_runways(const std::vector<std::string>& knowledge,
                                           const std::string& airport) {
  std::vector<std::string> out;
  const std::string prefix = detail::to_upper(airport) + " HAS_RUNWAY ";
  for (const auto& line : knowledge) {
    if (line.rfind(prefix, 0) != 0) continue;
    std::string r = normalize_runway(line.substr(prefix.size()));
    if (!r.empty() && std::find(out.begin(), out.end(), r) == out.end()) out.push_back(std::move(r));
  }
  return out;
}

std::string NotamFeaturizer::schema() const {
  return "notam-agreement/1/" + std::to_string(kAgreementFeatures) + "+" + std::to_string(kHashBuckets);
}

Vector NotamFeaturizer::features(const PolicyInput& input, const std::string& candidate) const {
  Vector f(dimension(), 0.0);
  RecordList recs;
  try {
    recs = parse_record_list(candidate);
  } catch (const InvalidRecord&) {
    return f;
  }
  const NoticeView view = view_of(input.text);
  const std::string location = view.notam && view.notam->location ? *view.notam->location : "";
  const auto in_text = text_designators(view.body);
  std::set<std::string> in_kg;
  for (const auto& r : knowledge_runways(input.knowledge, location)) in_kg.insert(designator_of(r));
  const StructuredRecord rule = rule_values(view, rules_);

  std::set<std::string> cand;
  std::size_t with_runway = 0, text_hits = 0, kg_hits = 0;
  std::size_t region_ok = 0, flight_ok = 0, actype_ok = 0, airport_ok = 0;
  bool empty_runway = false;
  for (const auto& r : recs) {
    if (r.runway.empty()) {
      empty_runway = true;
    } else {
      const std::string d = designator_of(r.runway);
      cand.insert(d);
      ++with_runway;
      text_hits += in_text.count(d);
      kg_hits += in_kg.count(d);
    }
    region_ok += r.affect_region == rule.affect_region;
    flight_ok += r.flight_type == rule.flight_type;
    actype_ok += r.affect_actype == rule.affect_actype;
    airport_ok += !location.empty() && r.airport == location;
  }
  std::size_t covered = 0;
  for (const auto& d : in_text) covered += cand.count(d);

  f[0] = recs.empty() ? 1.0 : 0.0;
  f[1] = fraction(text_hits, with_runway);
  f[2] = fraction(kg_hits, with_runway);
  f[3] = empty_runway ? 1.0 : 0.0;
  f[4] = empty_runway && in_text.empty() && !in_kg.empty() ? 1.0 : 0.0;
  f[5] = !cand.empty() && cand == in_text ? 1.0 : 0.0;
  f[6] = !cand.empty() && cand == in_kg ? 1.0 : 0.0;
  f[7] = fraction(region_ok, recs.size());
  f[8] = fraction(flight_ok, recs.size());
  f[9] = fraction(actype_ok, recs.size());
  f[10] = fraction(airport_ok, recs.size());
  f[11] = fraction(covered, in_text.size());

  if (!recs.empty()) {
    const double share = 1.0 / static_cast<double>(recs.size());
    auto bump = [&](const std::string& key) { f[kAgreementFeatures + fnv1a(key) % kHashBuckets] += share; };
    for (const auto& r : recs) {
      bump("region=" + std::string(to_string(r.affect_region)));
      bump("flight=" + r.flight_type.to_string());
      bump(r.affect_actype ? "actype=set" : "actype=null");
      bump(normalize_runway(r.runway).rfind("RWY ", 0) == 0 ? "runway=named" : "runway=bare");
    }
  }
  return f;
}

std::vector<std::string> enumerate_notam_candidates(const Notam& notam, const KnowledgeBundle& bundle,
                                                    const std::optional<std::string>& gold, std::size_t cap,
                                                    const RuleSet& rules) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto push = [&](std::string s) {
    if (out.size() < cap && seen.insert(s).second) out.push_back(std::move(s));
  };
  if (gold) push(canonical_serialize(parse_record_list(*gold)));
  if (!notam.location) {
    push("[]");
    return out;
  }

  const NoticeView view{notam, normalize_whitespace(detail::to_upper(notam.body))};
  const StructuredRecord rule = rule_values(view, rules);

  std::vector<std::vector<std::string>> runway_sets;
  if (const auto t = text_designators(view.body); !t.empty()) runway_sets.emplace_back(t.begin(), t.end());
  if (auto k = knowledge_runways(bundle.lines(), *notam.location); !k.empty()) runway_sets.push_back(std::move(k));
  runway_sets.push_back({""});

  std::vector<AffectRegion> regions{rule.affect_region};
  for (auto r : {AffectRegion::TakeoffsLandings, AffectRegion::Takeoffs, AffectRegion::Landings})
    if (r != rule.affect_region) regions.push_back(r);

  std::vector<std::optional<std::string>> actypes{rule.affect_actype};
  if (rule.affect_actype) actypes.emplace_back(std::nullopt);

  for (const auto& runways : runway_sets) {
    for (auto region : regions) {
      for (const auto& actype : actypes) {
        RecordList list;
        for (const auto& rwy : runways) {
          StructuredRecord r;
          r.airport = *notam.location;
          r.runway = rwy;
          r.affect_actype = actype;
          r.affect_region = region;
          r.flight_type = rule.flight_type;
          list.push_back(std::move(r));
        }
        push(canonical_serialize(list));
      }
    }
  }
  push("[]");
  return out;
}

}  // namespace notamkit
