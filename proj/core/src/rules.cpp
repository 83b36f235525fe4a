#include "notamkit/rules.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <regex>
#include <set>

#include "notamkit/error.hpp"
#include "notamkit/qcode.hpp"
#include "notamkit/resources.hpp"
#include "text_util.hpp"

namespace notamkit {

namespace {

struct Hit {
  std::size_t begin;
  std::size_t end;
  int category;
};

std::string upper_flat(std::string_view text) { return normalize_whitespace(detail::to_upper(text)); }

// Whole-word hits of every keyword, with hits nested inside a longer hit
// removed.
std::vector<Hit> keyword_hits(std::string_view text,
                              const std::vector<std::pair<const std::vector<std::string>*, int>>& lists) {
  std::vector<Hit> hits;
  for (const auto& [list, category] : lists)
    for (const auto& kw : *list)
      for (std::size_t pos : detail::find_phrase(text, kw)) hits.push_back({pos, pos + kw.size(), category});

  std::vector<Hit> kept;
  for (const auto& h : hits) {
    const bool nested = std::any_of(hits.begin(), hits.end(), [&](const Hit& o) {
      return o.begin <= h.begin && h.end <= o.end && (o.end - o.begin) > (h.end - h.begin);
    });
    if (!nested) kept.push_back(h);
  }
  return kept;
}

std::size_t first_hit(std::string_view text, const std::vector<std::string>& keywords) {
  std::size_t best = std::string_view::npos;
  for (const auto& kw : keywords) {
    const auto pos = detail::find_phrase(text, kw);
    if (!pos.empty()) best = std::min(best, pos.front());
  }
  return best;
}

std::string format_meters(double m) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2fM", m);
  return buf;
}

const std::regex& runway_token_regex() {
  static const std::regex re(R"(\b(?:RWY|RUNWAY)\s*([0-3]?\d[LRC]?(?:/[0-3]?\d[LRC]?)*)(?![0-9A-Z]))",
                             std::regex::icase | std::regex::optimize);
  return re;
}

}  // namespace

RuleSet RuleSet::parse(std::string_view text, const std::string& source) {
  RuleSet rs;
  std::string section;
  std::size_t line_no = 0;
  for (const auto& raw : detail::split_lines(text)) {
    ++line_no;
    const std::string line = detail::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = line.substr(1, line.size() - 2);
      continue;
    }
    auto split_pair = [&]() -> std::pair<std::string, std::string> {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw FormatError(source, line_no, "expected 'PHRASE = VALUE'");
      return {upper_flat(line.substr(0, eq)), detail::trim(line.substr(eq + 1))};
    };
    if (section == "closed") {
      rs.closed_keywords.push_back(upper_flat(line));
    } else if (section == "limited") {
      rs.limited_keywords.push_back(upper_flat(line));
    } else if (section == "open") {
      rs.open_keywords.push_back(upper_flat(line));
    } else if (section == "region") {
      auto [phrase, value] = split_pair();
      const auto region = parse_affect_region(value);
      if (!region) throw FormatError(source, line_no, "unknown region '" + value + "'");
      rs.region_keywords.emplace_back(std::move(phrase), *region);
    } else if (section == "flight_type") {
      auto [phrase, value] = split_pair();
      if (value.empty()) throw FormatError(source, line_no, "empty flight type");
      rs.flight_type_keywords.emplace_back(std::move(phrase), std::move(value));
    } else if (section == "ignore") {
      rs.ignore_keywords.push_back(upper_flat(line));
    } else if (section == "aerodrome") {
      rs.aerodrome_keywords.push_back(upper_flat(line));
    } else {
      throw FormatError(source, line_no, "entry outside a known section");
    }
  }
  rs.validate(source);
  return rs;
}

RuleSet RuleSet::load(const std::filesystem::path& path) {
  return parse(detail::read_file(path), path.string());
}

const RuleSet& RuleSet::builtin() {
  static const RuleSet rs = parse(resources::rule_set(), "builtin:ruleset.txt");
  return rs;
}

void RuleSet::validate(const std::string& source) const {
  std::set<std::string> seen;
  for (const auto* list : {&closed_keywords, &limited_keywords, &open_keywords})
    for (const auto& kw : *list)
      if (!seen.insert(kw).second) throw FormatError(source, 0, "keyword '" + kw + "' listed twice");
  if (closed_keywords.empty() || limited_keywords.empty() || open_keywords.empty())
    throw FormatError(source, 0, "every status category needs at least one keyword");
}

std::optional<RunwayStatus> classify_status(std::string_view body, const RuleSet& rules) {
  const std::string text = upper_flat(body);
  const auto hits = keyword_hits(text, {{&rules.closed_keywords, 0},
                                        {&rules.limited_keywords, 1},
                                        {&rules.open_keywords, 2}});
  int best = 3;
  for (const auto& h : hits) best = std::min(best, h.category);
  switch (best) {
    case 0: return RunwayStatus::Closed;
    case 1: return RunwayStatus::Limited;
    case 2: return RunwayStatus::Open;
    default: return std::nullopt;
  }
}

StructuredRecord apply_defaults(const RecordDraft& draft, const RuleSet& rules) {
  StructuredRecord r;
  r.airport = draft.airport;
  r.runway = draft.runway;
  r.affect_actype = draft.affect_actype;
  r.affect_region = draft.affect_region.value_or(AffectRegion::TakeoffsLandings);
  r.status = draft.status;
  if (draft.flight_type && !draft.flight_type->empty()) {
    r.flight_type = *draft.flight_type;
  } else {
    FlightTypes found;
    const std::string text = upper_flat(draft.context);
    for (const auto& [phrase, label] : rules.flight_type_keywords)
      if (!detail::find_phrase(text, phrase).empty()) found.add(label);
    r.flight_type = found.empty() ? FlightTypes::all() : found;
  }
  return r;
}

double convert_wingspan(double value, LengthUnit unit) {
  if (!(value > 0.0)) throw NonPositiveValue(value);
  const double meters = unit == LengthUnit::Feet ? value * RuleSet::ft_to_m_factor : value;
  return std::floor(meters * 100.0 + 0.5) / 100.0;
}

std::vector<std::string> find_runway_designators(std::string_view body) {
  std::vector<std::string> out;
  const std::string text(body);
  for (auto it = std::sregex_iterator(text.begin(), text.end(), runway_token_regex());
       it != std::sregex_iterator(); ++it) {
    for (auto& d : expand_runway_designators((*it)[1].str()))
      if (std::find(out.begin(), out.end(), d) == out.end()) out.push_back(std::move(d));
  }
  return out;
}

std::optional<std::string> extract_actype(std::string_view body) {
  static const std::regex wingspan(
      R"(\bWINGSPAN\s+(OF\s+|MORE THAN\s+|GREATER THAN\s+|ABOVE\s+|EXCEEDING\s+|OVER\s+|>\s*)?(\d+(?:\.\d+)?)\s*(FT|M)\b)",
      std::regex::icase);
  static const std::regex code(R"(\bCODE\s+([A-F](?:\s*/\s*[A-F])*)\b)", std::regex::icase);
  static const std::regex engines(R"(\b([1-8])\s*-?\s*ENG(?:INE)?S?\b)", std::regex::icase);

  const std::string text = upper_flat(body);
  std::vector<std::string> parts;
  std::smatch m;
  if (std::regex_search(text, m, wingspan)) {
    const std::string qualifier = detail::trim(m[1].str());
    const bool above = !qualifier.empty() && qualifier != "OF";
    const double meters =
        convert_wingspan(std::stod(m[2].str()), m[3].str() == "FT" ? LengthUnit::Feet : LengthUnit::Meters);
    parts.push_back(std::string("WINGSPAN") + (above ? ">" : " ") + format_meters(meters));
  }
  if (std::regex_search(text, m, code)) {
    std::string letters;
    for (char c : m[1].str())
      if (c != ' ') letters += c;
    parts.push_back("CODE " + letters);
  }
  if (std::regex_search(text, m, engines)) parts.push_back(m[1].str() + " ENGINES");
  if (parts.empty()) return std::nullopt;
  std::string out = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) out += "; " + parts[i];
  return out;
}

RecordList extract_records(const Notam& notam, const RuleSet& rules) {
  if (!notam.location) return {};
  const auto status = classify_status(notam.body, rules);
  if (!status) return {};

  if (notam.q_line) {
    const auto info = decode_qcode(notam.q_line->qcode);
    static const std::set<std::string> kOutOfScope = {"MX", "MY", "MN", "MK", "MP", "MG"};
    if (info.area_letter == "L" || kOutOfScope.count(info.subject_letter_pair)) return {};
  }

  const std::string text = upper_flat(notam.body);
  const auto designators = find_runway_designators(text);
  const std::size_t ignore_at = first_hit(text, rules.ignore_keywords);

  std::optional<AffectRegion> region;
  bool takeoffs = false, landings = false;
  for (const auto& [phrase, r] : rules.region_keywords) {
    if (detail::find_phrase(text, phrase).empty()) continue;
    takeoffs |= r != AffectRegion::Landings;
    landings |= r != AffectRegion::Takeoffs;
  }
  if (takeoffs != landings) region = takeoffs ? AffectRegion::Takeoffs : AffectRegion::Landings;

  RecordDraft draft;
  draft.airport = *notam.location;
  draft.affect_actype = extract_actype(text);
  draft.affect_region = region;
  draft.context = text;

  RecordList out;
  if (designators.empty()) {
    const bool aerodrome_wide =
        first_hit(text, rules.aerodrome_keywords) != std::string_view::npos ||
        (notam.q_line && notam.q_line->qcode.substr(1, 2) == "FA");
    if (ignore_at != std::string_view::npos || !aerodrome_wide) return {};
    draft.runway = "";
    out.push_back(apply_defaults(draft, rules));
    return out;
  }

  std::smatch m;
  const bool has_token = std::regex_search(text, m, runway_token_regex());
  if (ignore_at != std::string_view::npos && has_token &&
      ignore_at < static_cast<std::size_t>(m.position(0)))
    return {};

  for (const auto& d : designators) {
    draft.runway = d;
    out.push_back(apply_defaults(draft, rules));
  }
  return out;
}

}  // namespace notamkit
