#include "notamkit/schema.hpp"

#include <algorithm>
#include <cstdlib>
#include <regex>
#include <set>
#include <tuple>

#include "notamkit/error.hpp"
#include "notamkit/resources.hpp"
#include "text_util.hpp"

namespace notamkit {

namespace {

bool is_number(const std::string& s) {
  if (s.empty()) return false;
  char* end = nullptr;
  std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

auto fact_key(const Fact& f) { return std::tie(f.subject, f.attribute, f.value); }

std::pair<std::string, std::string> split_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == text.size())
    throw Error("expected attribute=value, got '" + text + "'");
  return {detail::trim(text.substr(0, eq)), detail::trim(text.substr(eq + 1))};
}

// Node indices a fact subject may refer to: id, icao property or display name.
std::vector<std::size_t> resolve_subject(const KnowledgeGraph& g, const std::string& subject) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const auto& n = g.nodes()[i];
    const auto icao = n.properties.find("icao");
    if (detail::to_upper(n.id) == subject || detail::to_upper(n.display_name()) == subject ||
        (icao != n.properties.end() && detail::to_upper(icao->second) == subject))
      out.push_back(i);
  }
  return out;
}

}  // namespace

bool RangeGuard::holds(double v) const {
  const bool above = low_inclusive ? v >= low : v > low;
  const bool below = high_inclusive ? v <= high : v < high;
  return above && below;
}

bool RangeGuard::overlaps(const RangeGuard& o) const {
  if (attribute != o.attribute) return false;
  // Empty intersection iff one interval ends before the other starts.
  auto ends_before = [](const RangeGuard& a, const RangeGuard& b) {
    if (a.high < b.low) return true;
    if (a.high == b.low) return !(a.high_inclusive && b.low_inclusive);
    return false;
  };
  return !ends_before(*this, o) && !ends_before(o, *this);
}

RangeGuard RangeGuard::parse(std::string_view expr) {
  const auto tok = detail::split_words(expr);
  RangeGuard g;
  auto apply = [&](const std::string& lhs, const std::string& op, const std::string& rhs) {
    // Normalise to "attribute op number".
    std::string attr = lhs, num = rhs, o = op;
    if (is_number(lhs) && !is_number(rhs)) {
      attr = rhs;
      num = lhs;
      if (o == "<") o = ">";
      else if (o == "<=") o = ">=";
      else if (o == ">") o = "<";
      else if (o == ">=") o = "<=";
    }
    if (!is_number(num) || is_number(attr)) throw Error("guard needs one attribute and one number");
    if (!g.attribute.empty() && g.attribute != attr) throw Error("guard mixes attributes");
    g.attribute = attr;
    const double v = std::stod(num);
    if (o == ">" || o == ">=") {
      g.low = v;
      g.low_inclusive = o == ">=";
    } else if (o == "<" || o == "<=") {
      g.high = v;
      g.high_inclusive = o == "<=";
    } else {
      throw Error("unknown comparison '" + o + "'");
    }
  };
  if (tok.size() == 3) {
    apply(tok[0], tok[1], tok[2]);
  } else if (tok.size() == 5) {
    apply(tok[0], tok[1], tok[2]);
    apply(tok[2], tok[3], tok[4]);
  } else {
    throw Error("cannot parse guard '" + std::string(expr) + "'");
  }
  if (g.low > g.high) throw Error("empty guard interval");
  return g;
}

SchemaRuleSet SchemaRuleSet::parse(std::string_view text, const std::string& source) {
  SchemaRuleSet set;
  std::size_t line_no = 0;
  for (const auto& raw : detail::split_lines(text)) {
    ++line_no;
    const std::string line = detail::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto cols = detail::split(raw, '\t');
    for (auto& c : cols) c = detail::trim(c);
    if (cols.size() != 4) throw FormatError(source, line_no, "expected 4 tab-separated columns");
    SchemaRule r;
    r.id = cols[1];
    try {
      if (cols[0] == "RANGE") {
        r.kind = SchemaRule::Kind::Range;
        r.guard = RangeGuard::parse(cols[2]);
        std::tie(r.conclusion_attribute, r.conclusion_value) = split_assignment(cols[3]);
      } else if (cols[0] == "PROPAGATE") {
        r.kind = SchemaRule::Kind::Propagate;
        std::tie(r.trigger_attribute, r.trigger_value) = split_assignment(cols[2]);
        r.relation = cols[3];
        r.conclusion_attribute = r.trigger_attribute;
        r.conclusion_value = r.trigger_value;
      } else {
        throw Error("unknown rule kind '" + cols[0] + "'");
      }
    } catch (const FormatError&) {
      throw;
    } catch (const Error& e) {
      throw FormatError(source, line_no, e.what());
    }
    for (const auto& other : set.rules) {
      if (other.id == r.id) throw FormatError(source, line_no, "duplicate rule id '" + r.id + "'");
      if (r.kind == SchemaRule::Kind::Range && other.kind == SchemaRule::Kind::Range &&
          other.conclusion_attribute == r.conclusion_attribute && other.guard.overlaps(r.guard))
        throw FormatError(source, line_no, "guard overlaps rule '" + other.id + "'");
    }
    set.rules.push_back(std::move(r));
  }
  return set;
}

SchemaRuleSet SchemaRuleSet::load(const std::filesystem::path& path) {
  return parse(detail::read_file(path), path.string());
}

const SchemaRuleSet& SchemaRuleSet::builtin() {
  static const SchemaRuleSet s = parse(resources::schema_rules(), "builtin:schema_rules.tsv");
  return s;
}

std::vector<Fact> infer_schema_facts(const std::vector<Fact>& facts, const SchemaRuleSet& rules,
                                     const KnowledgeGraph* graph) {
  std::vector<Fact> known = facts;
  std::vector<Fact> derived;
  auto seen = [&](const Fact& f) { return std::find(known.begin(), known.end(), f) != known.end(); };

  std::size_t frontier = 0;
  while (frontier < known.size()) {
    const std::size_t end = known.size();
    for (std::size_t i = frontier; i < end; ++i) {
      const Fact f = known[i];
      for (const auto& rule : rules.rules) {
        if (rule.kind == SchemaRule::Kind::Range) {
          if (f.attribute != rule.guard.attribute || !is_number(f.value)) continue;
          if (!rule.guard.holds(std::stod(f.value))) continue;
          Fact d{f.subject, rule.conclusion_attribute, rule.conclusion_value, "rule:" + rule.id};
          if (!seen(d)) {
            known.push_back(d);
            derived.push_back(std::move(d));
          }
        } else if (graph) {
          if (f.attribute != rule.trigger_attribute || f.value != rule.trigger_value) continue;
          for (std::size_t node : resolve_subject(*graph, detail::to_upper(f.subject))) {
            for (std::size_t e : graph->out_edges(node)) {
              if (graph->edges()[e].relation != rule.relation) continue;
              const auto& target = graph->nodes()[graph->edge_target(e)];
              Fact d{detail::to_upper(target.display_name()), rule.conclusion_attribute,
                     rule.conclusion_value, "rule:" + rule.id};
              if (!seen(d)) {
                known.push_back(d);
                derived.push_back(std::move(d));
              }
            }
          }
        }
      }
    }
    frontier = end;
  }
  return derived;
}

std::vector<Fact> apply_schema(const std::vector<Fact>& facts, const SchemaRuleSet& rules,
                               const KnowledgeGraph* graph) {
  std::vector<Fact> all = facts;
  for (auto& d : infer_schema_facts(facts, rules, graph)) all.push_back(std::move(d));
  std::stable_sort(all.begin(), all.end(), [](const Fact& a, const Fact& b) { return fact_key(a) < fact_key(b); });
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

std::vector<Fact> extract_notice_facts(const Notam& notam, const RuleSet& rules) {
  std::vector<Fact> out;
  if (!notam.location) return out;
  const std::string provenance = "notice:" + (notam.id.empty() ? *notam.location : notam.id);
  const std::string body = normalize_whitespace(detail::to_upper(notam.body));

  for (const auto& r : extract_records(notam, rules))
    if (r.runway.empty() && classify_status(body, rules) == RunwayStatus::Closed)
      out.push_back({*notam.location, "status", "Closed", provenance});

  static const std::regex lighting(R"(\b(ALS|APCH LGT|APPROACH LIGHT\w*|APPROACH LGT)\b)");
  static const std::regex length(R"(\bLENGTH(?: OF)?\s+(\d+(?:\.\d+)?)\s*M\b)");
  std::smatch m;
  if (std::regex_search(body, lighting) && std::regex_search(body, m, length)) {
    const auto rwys = find_runway_designators(body);
    const std::string subject = rwys.empty() ? *notam.location : "RWY " + rwys.front();
    out.push_back({subject, "approach_lighting_length_m", m[1].str(), provenance});
  }
  return out;
}

}  // namespace notamkit
