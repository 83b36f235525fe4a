#pragma once

#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "notamkit/knowledge.hpp"
#include "notamkit/notam.hpp"
#include "notamkit/rules.hpp"

namespace notamkit {

/// (subject, attribute, value) with provenance: a loaded file line, a
/// notice id, or "rule:<id>" for derived facts.
struct Fact {
  std::string subject;
  std::string attribute;
  std::string value;
  std::string provenance;

  friend bool operator==(const Fact& a, const Fact& b) {
    return a.subject == b.subject && a.attribute == b.attribute && a.value == b.value;
  }
};

/// Numeric interval guard on one named fact.
struct RangeGuard {
  std::string attribute;
  double low = -std::numeric_limits<double>::infinity();
  bool low_inclusive = false;
  double high = std::numeric_limits<double>::infinity();
  bool high_inclusive = false;

  bool holds(double v) const;
  bool overlaps(const RangeGuard& other) const;
  /// Parses "300 <= length_m < 420", "length_m >= 420", "0 < length_m".
  static RangeGuard parse(std::string_view expr);
};

struct SchemaRule {
  enum class Kind { Range, Propagate };
  Kind kind = Kind::Range;
  std::string id;
  RangeGuard guard;                 // Range
  std::string trigger_attribute;    // Propagate: fires on attribute=value
  std::string trigger_value;
  std::string relation;             // Propagate: along this edge relation
  std::string conclusion_attribute;
  std::string conclusion_value;
};

/// Rule file, one rule per line, tab separated:
///   RANGE      <id>  <guard expression>      <attribute>=<value>
///   PROPAGATE  <id>  <attribute>=<value>     <RELATION>
/// Range rules concluding the same attribute from the same fact form a
/// family; guards within a family must not overlap.
struct SchemaRuleSet {
  std::vector<SchemaRule> rules;

  static SchemaRuleSet parse(std::string_view text, const std::string& source = "<memory>");
  static SchemaRuleSet load(const std::filesystem::path& path);
  static const SchemaRuleSet& builtin();
};

/// Facts derived from `facts` by repeatedly firing every rule until nothing
/// new appears. Propagation rules need the graph to follow edges; without
/// one they never fire. Input facts are not repeated in the result.
std::vector<Fact> infer_schema_facts(const std::vector<Fact>& facts, const SchemaRuleSet& rules,
                                     const KnowledgeGraph* graph = nullptr);

/// facts plus their derivations, deduplicated and sorted.
std::vector<Fact> apply_schema(const std::vector<Fact>& facts, const SchemaRuleSet& rules,
                               const KnowledgeGraph* graph = nullptr);

/// Status and numeric facts stated by a notice: aerodrome-wide closure and
/// approach-lighting length.
std::vector<Fact> extract_notice_facts(const Notam& notam, const RuleSet& rules = RuleSet::builtin());

}  // namespace notamkit
