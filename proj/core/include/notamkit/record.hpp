#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace notamkit {

enum class AffectRegion { Takeoffs, Landings, TakeoffsLandings };
enum class RunwayStatus { Closed, Limited, Open };

std::string_view to_string(AffectRegion r);
std::string_view to_string(RunwayStatus s);
/// Accepts "TAKEOFFS", "LANDINGS", "TAKEOFFS,LANDINGS" and "TAKEOFFS_LANDINGS".
std::optional<AffectRegion> parse_affect_region(std::string_view text);
std::optional<RunwayStatus> parse_runway_status(std::string_view text);

/// Affected flight types. The three standard labels are kept in the fixed
/// order International, Domestic, Regional; any other wording is carried
/// verbatim after them.
class FlightTypes {
 public:
  FlightTypes() = default;
  static FlightTypes all();
  static FlightTypes parse(std::string_view comma_list);

  void add(std::string_view label);
  bool empty() const noexcept { return labels_.empty(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::string to_string() const;

  friend bool operator==(const FlightTypes&, const FlightTypes&) = default;

 private:
  std::vector<std::string> labels_;
};

/// One row of extracted intelligence.
struct StructuredRecord {
  std::string airport;
  std::string runway;  // empty string when no runway applies
  std::optional<std::string> affect_actype;
  AffectRegion affect_region = AffectRegion::TakeoffsLandings;
  FlightTypes flight_type = FlightTypes::all();
  std::optional<RunwayStatus> status;
};

using RecordList = std::vector<StructuredRecord>;

/// Throws InvalidRecord if the record breaks a structural invariant.
void validate(const StructuredRecord& record);
bool is_valid(const StructuredRecord& record) noexcept;

/// Uppercases and collapses whitespace: "rwy  07r" -> "RWY 07R".
std::string normalize_runway(std::string_view runway);

/// "17L/35R" -> {"17L","35R"}; "RWY 07R" -> {"07R"}; "9" -> {"09"}.
/// Throws NotARunwayToken when any part is not a designator.
std::vector<std::string> expand_runway_designators(std::string_view segment);

/// JSON text for one record list; keys sorted, no whitespace, records in
/// canonical order. Two lists are equal iff these strings are equal.
std::string canonical_serialize(const RecordList& records);
RecordList canonicalize(RecordList records);

/// Parses a JSON array of record objects (null and absent optional fields
/// are identical). Throws InvalidRecord on any structural problem.
RecordList parse_record_list(std::string_view json_text);

bool records_equal(const RecordList& a, const RecordList& b);

}  // namespace notamkit
