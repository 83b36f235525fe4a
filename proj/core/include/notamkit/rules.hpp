#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "notamkit/notam.hpp"
#include "notamkit/record.hpp"

namespace notamkit {

/// Keyword tables of the runway-status rule set. Loaded from a sectioned
/// text file (see data/rules/ruleset.txt) so keyword lists can be extended
/// without recompiling.
struct RuleSet {
  static constexpr double ft_to_m_factor = 0.3048;

  std::vector<std::string> closed_keywords;
  std::vector<std::string> limited_keywords;
  std::vector<std::string> open_keywords;
  std::vector<std::pair<std::string, AffectRegion>> region_keywords;
  std::vector<std::pair<std::string, std::string>> flight_type_keywords;
  std::vector<std::string> ignore_keywords;     // taxiway, apron, lighting subjects
  std::vector<std::string> aerodrome_keywords;  // airport-wide subjects

  static RuleSet parse(std::string_view text, const std::string& source = "<memory>");
  static RuleSet load(const std::filesystem::path& path);
  static const RuleSet& builtin();

  /// Throws FormatError when status keyword lists overlap.
  void validate(const std::string& source = "<memory>") const;
};

/// Classifies by priority Closed > Limited > Open using whole-word,
/// case-insensitive matching. A keyword occurrence lying inside a longer
/// keyword occurrence does not count ("CANCELLED CLOSURE" is Open only).
/// Returns nullopt when no keyword fires.
std::optional<RunwayStatus> classify_status(std::string_view body, const RuleSet& rules = RuleSet::builtin());

/// A record under construction. Unset optionals receive defaults; context
/// is the text scanned for explicit flight-type markers.
struct RecordDraft {
  std::string airport;
  std::string runway;
  std::optional<std::string> affect_actype;
  std::optional<AffectRegion> affect_region;
  std::optional<FlightTypes> flight_type;
  std::optional<RunwayStatus> status;
  std::string context;
};

StructuredRecord apply_defaults(const RecordDraft& draft, const RuleSet& rules = RuleSet::builtin());

enum class LengthUnit { Feet, Meters };

/// Feet are converted with the exact factor 0.3048; the result is rounded
/// half-up to two decimals. Throws NonPositiveValue for value <= 0.
double convert_wingspan(double value, LengthUnit unit);

/// Runway designators mentioned in the body, in order, duplicates removed.
std::vector<std::string> find_runway_designators(std::string_view body);

/// Aircraft restriction text ("WINGSPAN 36.00M", "CODE C/D") or nullopt.
std::optional<std::string> extract_actype(std::string_view body);

/// Rule-baseline parser: one record per runway designator mentioned in the
/// body; a single runway-less record for aerodrome-wide notices; nothing
/// when no status keyword fires or the notice is out of scope.
RecordList extract_records(const Notam& notam, const RuleSet& rules = RuleSet::builtin());

}  // namespace notamkit
