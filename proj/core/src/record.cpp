#include "notamkit/record.hpp"

#include <algorithm>
#include <array>

#include <nlohmann/json.hpp>

#include "notamkit/error.hpp"
#include "notamkit/notam.hpp"
#include "text_util.hpp"

namespace notamkit {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 3> kStandardFlightTypes = {"International", "Domestic",
                                                                  "Regional"};

std::optional<std::size_t> standard_flight_type(std::string_view label) {
  const std::string up = detail::to_upper(label);
  for (std::size_t i = 0; i < kStandardFlightTypes.size(); ++i)
    if (detail::to_upper(kStandardFlightTypes[i]) == up) return i;
  return std::nullopt;
}

bool is_designator(std::string_view s) {
  // [0-3][0-9][LRC]?
  if (s.size() < 2 || s.size() > 3) return false;
  if (s[0] < '0' || s[0] > '3' || s[1] < '0' || s[1] > '9') return false;
  return s.size() == 2 || s[2] == 'L' || s[2] == 'R' || s[2] == 'C';
}

json to_json(const StructuredRecord& r) {
  json j = json::object();
  j["airport"] = r.airport;
  j["runway"] = r.runway;
  j["affect_actype"] = r.affect_actype ? json(*r.affect_actype) : json(nullptr);
  j["affect_region"] = std::string(to_string(r.affect_region));
  j["flight_type"] = r.flight_type.to_string();
  if (r.status) j["status"] = std::string(to_string(*r.status));
  return j;
}

StructuredRecord canonical_record(StructuredRecord r) {
  r.airport = detail::to_upper(detail::trim(r.airport));
  r.runway = normalize_runway(r.runway);
  if (r.affect_actype) {
    auto v = normalize_whitespace(detail::to_upper(*r.affect_actype));
    if (v.empty() || v == "NULL")
      r.affect_actype.reset();
    else
      r.affect_actype = std::move(v);
  }
  return r;
}

std::string get_string(const json& obj, const char* key, bool required) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    if (required) throw InvalidRecord(std::string("missing field '") + key + "'");
    return {};
  }
  if (!it->is_string()) throw InvalidRecord(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

StructuredRecord record_from_json(const json& j) {
  if (!j.is_object()) throw InvalidRecord("record must be an object");
  StructuredRecord r;
  r.airport = get_string(j, "airport", true);
  r.runway = get_string(j, "runway", false);
  if (const auto it = j.find("affect_actype"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw InvalidRecord("affect_actype must be a string or null");
    r.affect_actype = it->get<std::string>();
  }
  const auto region = parse_affect_region(get_string(j, "affect_region", true));
  if (!region) throw InvalidRecord("bad affect_region");
  r.affect_region = *region;

  const auto ft = j.find("flight_type");
  if (ft == j.end() || ft->is_null()) throw InvalidRecord("missing field 'flight_type'");
  if (ft->is_string()) {
    r.flight_type = FlightTypes::parse(ft->get<std::string>());
  } else if (ft->is_array()) {
    r.flight_type = FlightTypes{};
    for (const auto& e : *ft) {
      if (!e.is_string()) throw InvalidRecord("flight_type entries must be strings");
      r.flight_type.add(e.get<std::string>());
    }
  } else {
    throw InvalidRecord("flight_type must be a string or list");
  }

  if (const auto it = j.find("status"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw InvalidRecord("status must be a string");
    const auto st = parse_runway_status(it->get<std::string>());
    if (!st) throw InvalidRecord("bad status");
    r.status = *st;
  }
  r = canonical_record(std::move(r));
  validate(r);
  return r;
}

}  // namespace

std::string_view to_string(AffectRegion r) {
  switch (r) {
    case AffectRegion::Takeoffs: return "TAKEOFFS";
    case AffectRegion::Landings: return "LANDINGS";
    case AffectRegion::TakeoffsLandings: return "TAKEOFFS,LANDINGS";
  }
  return "TAKEOFFS,LANDINGS";
}

std::string_view to_string(RunwayStatus s) {
  switch (s) {
    case RunwayStatus::Closed: return "Closed";
    case RunwayStatus::Limited: return "Limited";
    case RunwayStatus::Open: return "Open";
  }
  return "Closed";
}

std::optional<AffectRegion> parse_affect_region(std::string_view text) {
  std::string t;
  for (char c : detail::to_upper(text))
    if (c != ' ') t += c;
  if (t == "TAKEOFFS") return AffectRegion::Takeoffs;
  if (t == "LANDINGS") return AffectRegion::Landings;
  if (t == "TAKEOFFS,LANDINGS" || t == "TAKEOFFS_LANDINGS" || t == "LANDINGS,TAKEOFFS")
    return AffectRegion::TakeoffsLandings;
  return std::nullopt;
}

std::optional<RunwayStatus> parse_runway_status(std::string_view text) {
  const std::string t = detail::to_upper(detail::trim(text));
  if (t == "CLOSED") return RunwayStatus::Closed;
  if (t == "LIMITED" || t == "RESTRICTED") return RunwayStatus::Limited;
  if (t == "OPEN") return RunwayStatus::Open;
  return std::nullopt;
}

FlightTypes FlightTypes::all() {
  FlightTypes f;
  for (auto l : kStandardFlightTypes) f.labels_.emplace_back(l);
  return f;
}

FlightTypes FlightTypes::parse(std::string_view comma_list) {
  FlightTypes f;
  for (const auto& part : detail::split(comma_list, ',')) f.add(part);
  return f;
}

void FlightTypes::add(std::string_view raw) {
  const std::string label = detail::trim(raw);
  if (label.empty()) return;
  std::vector<std::string> standard, extra;
  for (const auto& l : labels_) (standard_flight_type(l) ? standard : extra).push_back(l);
  if (const auto idx = standard_flight_type(label)) {
    standard.emplace_back(kStandardFlightTypes[*idx]);
  } else {
    extra.push_back(label);
  }
  std::sort(standard.begin(), standard.end(), [](const auto& a, const auto& b) {
    return *standard_flight_type(a) < *standard_flight_type(b);
  });
  standard.erase(std::unique(standard.begin(), standard.end()), standard.end());
  std::sort(extra.begin(), extra.end());
  extra.erase(std::unique(extra.begin(), extra.end()), extra.end());
  labels_ = std::move(standard);
  labels_.insert(labels_.end(), extra.begin(), extra.end());
}

std::string FlightTypes::to_string() const {
  std::string out;
  for (const auto& l : labels_) {
    if (!out.empty()) out += ',';
    out += l;
  }
  return out;
}

std::string normalize_runway(std::string_view runway) {
  return normalize_whitespace(detail::to_upper(runway));
}

bool is_valid(const StructuredRecord& r) noexcept {
  if (!is_icao_code(r.airport)) return false;
  if (r.flight_type.empty()) return false;
  if (r.runway.empty()) return true;
  std::string_view rwy = r.runway;
  if (rwy.rfind("RWY ", 0) == 0) rwy.remove_prefix(4);
  return is_designator(rwy);
}

void validate(const StructuredRecord& r) {
  if (!is_icao_code(r.airport)) throw InvalidRecord("airport '" + r.airport + "' is not an ICAO code");
  if (r.flight_type.empty()) throw InvalidRecord("flight_type is empty");
  if (!is_valid(r)) throw InvalidRecord("runway '" + r.runway + "' is not a designator");
}

std::vector<std::string> expand_runway_designators(std::string_view segment) {
  std::string s = normalize_whitespace(detail::to_upper(segment));
  for (std::string_view prefix : {"RUNWAY", "RWY"}) {
    if (s.rfind(prefix, 0) == 0) {
      s = detail::trim(s.substr(prefix.size()));
      break;
    }
  }
  std::vector<std::string> out;
  for (auto part : detail::split(s, '/')) {
    part = detail::trim(part);
    if (!part.empty() && std::isdigit(static_cast<unsigned char>(part[0])) &&
        (part.size() == 1 || !std::isdigit(static_cast<unsigned char>(part[1]))))
      part.insert(part.begin(), '0');
    if (!is_designator(part)) throw NotARunwayToken(std::string(segment));
    out.push_back(std::move(part));
  }
  return out;
}

RecordList canonicalize(RecordList records) {
  std::vector<std::pair<std::string, StructuredRecord>> keyed;
  keyed.reserve(records.size());
  for (auto& r : records) {
    auto c = canonical_record(std::move(r));
    keyed.emplace_back(to_json(c).dump(), std::move(c));
  }
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    if (a.second.airport != b.second.airport) return a.second.airport < b.second.airport;
    if (a.second.runway != b.second.runway) return a.second.runway < b.second.runway;
    return a.first < b.first;
  });
  RecordList out;
  out.reserve(keyed.size());
  for (auto& [_, r] : keyed) out.push_back(std::move(r));
  return out;
}

std::string canonical_serialize(const RecordList& records) {
  json arr = json::array();
  for (const auto& r : canonicalize(records)) arr.push_back(to_json(r));
  return arr.dump();
}

RecordList parse_record_list(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw InvalidRecord(std::string("not JSON: ") + e.what());
  }
  if (j.is_object()) j = json::array({j});
  if (!j.is_array()) throw InvalidRecord("record list must be a JSON array");
  RecordList out;
  for (const auto& e : j) out.push_back(record_from_json(e));
  return out;
}

bool records_equal(const RecordList& a, const RecordList& b) {
  return a.size() == b.size() && canonical_serialize(a) == canonical_serialize(b);
}

}  // namespace notamkit
