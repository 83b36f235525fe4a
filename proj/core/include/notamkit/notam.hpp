#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace notamkit {

/// Q) line: FIR/QCODE/TRAFFIC/PURPOSE/SCOPE/LOWER/UPPER/COORDS.
struct QLine {
  std::string fir;
  std::string qcode;
  std::string traffic;   // subset of "IV"
  std::string purpose;   // subset of "NBOM"
  std::string scope;     // subset of "AEW"
  int lower_limit = 0;   // flight level
  int upper_limit = 999;
  std::string coordinates_radius;

  friend bool operator==(const QLine&, const QLine&) = default;
};

struct Notam {
  std::string id;
  std::string raw_text;
  std::optional<QLine> q_line;
  std::optional<std::string> location;    // A)
  std::optional<std::string> valid_from;  // B) YYMMDDHHMM
  std::optional<std::string> valid_to;    // C) YYMMDDHHMM or PERM
  std::optional<std::string> schedule;    // D), passed through
  std::string body;                       // E), whitespace-normalized
  std::optional<std::string> lower_vertical;  // F), passed through
  std::optional<std::string> upper_vertical;  // G), passed through

  /// Field-level equality; ignores raw_text and id.
  bool same_fields(const Notam& other) const;
};

/// Parses a raw notice. Labels may be written "A)" or "A )". The E) field
/// runs to the next F)/G) label or the end of the text.
///
/// Throws MissingEField when there is no E) segment and MalformedField when
/// a present field fails its format.
Notam parse_notam(std::string_view raw, std::string id = {});

/// Renders the fields back into a raw notice that parse_notam accepts.
std::string serialize_notam(const Notam& notam);

/// Collapses runs of whitespace into single spaces and trims the ends.
std::string normalize_whitespace(std::string_view text);

bool is_icao_code(std::string_view s);
bool is_timestamp(std::string_view s);

}  // namespace notamkit
