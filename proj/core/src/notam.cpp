#include "notamkit/notam.hpp"

#include <array>
#include <cctype>
#include <cstdio>
#include <vector>

#include "notamkit/error.hpp"
#include "notamkit/qcode.hpp"

namespace notamkit {

namespace {

struct LabelHit {
  char label;
  std::size_t begin;  // position of the letter
  std::size_t end;    // one past ')'
};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Matches "X)" or "X )" at pos, where X is preceded by start-of-text or
// whitespace. Returns the offset one past ')' or npos.
std::size_t label_end_at(std::string_view raw, std::size_t pos) {
  if (pos > 0 && !is_space(raw[pos - 1])) return std::string_view::npos;
  std::size_t i = pos + 1;
  while (i < raw.size() && (raw[i] == ' ' || raw[i] == '\t')) ++i;
  if (i < raw.size() && raw[i] == ')') return i + 1;
  return std::string_view::npos;
}

std::vector<LabelHit> find_labels(std::string_view raw) {
  std::vector<LabelHit> hits;
  bool in_body = false;
  std::string_view allowed = "QABCDE";
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const char c = raw[i];
    if (allowed.find(c) == std::string_view::npos) continue;
    const std::size_t end = label_end_at(raw, i);
    if (end == std::string_view::npos) continue;
    hits.push_back({c, i, end});
    if (c == 'E' && !in_body) {
      in_body = true;
      allowed = "FG";
    } else if (c == 'F') {
      allowed = "G";
    } else if (c == 'G') {
      allowed = "";
    }
    i = end - 1;
  }
  return hits;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t p = s.find(sep, start);
    if (p == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, p - start));
    start = p + 1;
  }
}

bool letters_subset(std::string_view s, std::string_view alphabet) {
  if (s.empty()) return false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (alphabet.find(s[i]) == std::string_view::npos) return false;
    if (s.find(s[i]) != i) return false;  // repeated letter
  }
  return true;
}

bool is_flight_level(std::string_view s) {
  if (s.size() != 3) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

QLine parse_qline(std::string_view content) {
  const std::string flat = normalize_whitespace(content);
  auto parts = split(flat, '/');
  if (parts.size() < 7) throw MalformedField("Q", "expected at least 7 '/'-separated parts");
  for (auto& p : parts) p = normalize_whitespace(p);

  QLine q;
  q.fir = parts[0];
  q.qcode = parts[1];
  q.traffic = parts[2];
  q.purpose = parts[3];
  q.scope = parts[4];
  if (!is_icao_code(q.fir)) throw MalformedField("Q", "FIR '" + q.fir + "'");
  if (!is_qcode(q.qcode)) throw MalformedField("Q", "Q-code '" + q.qcode + "'");
  if (!letters_subset(q.traffic, "IV")) throw MalformedField("Q", "traffic '" + q.traffic + "'");
  if (!letters_subset(q.purpose, "NBOM")) throw MalformedField("Q", "purpose '" + q.purpose + "'");
  if (!letters_subset(q.scope, "AEW")) throw MalformedField("Q", "scope '" + q.scope + "'");
  if (!is_flight_level(parts[5]) || !is_flight_level(parts[6]))
    throw MalformedField("Q", "vertical limits '" + parts[5] + "/" + parts[6] + "'");
  q.lower_limit = std::stoi(parts[5]);
  q.upper_limit = std::stoi(parts[6]);
  if (q.lower_limit > q.upper_limit) throw MalformedField("Q", "lower limit above upper limit");

  std::string coords;
  for (std::size_t i = 7; i < parts.size(); ++i) {
    if (parts[i].empty()) continue;
    if (!coords.empty()) coords += '/';
    coords += parts[i];
  }
  q.coordinates_radius = coords;
  return q;
}

}  // namespace

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

bool is_icao_code(std::string_view s) {
  if (s.size() != 4) return false;
  for (char c : s)
    if (c < 'A' || c > 'Z') return false;
  return true;
}

bool is_timestamp(std::string_view s) {
  if (s.size() != 10) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  auto two = [&](std::size_t at) { return (s[at] - '0') * 10 + (s[at + 1] - '0'); };
  const int month = two(2), day = two(4), hour = two(6), minute = two(8);
  return month >= 1 && month <= 12 && day >= 1 && day <= 31 && hour <= 23 && minute <= 59;
}

bool Notam::same_fields(const Notam& o) const {
  return q_line == o.q_line && location == o.location && valid_from == o.valid_from &&
         valid_to == o.valid_to && schedule == o.schedule && body == o.body &&
         lower_vertical == o.lower_vertical && upper_vertical == o.upper_vertical;
}

Notam parse_notam(std::string_view raw, std::string id) {
  const auto hits = find_labels(raw);
  std::array<std::optional<std::string>, 256> fields;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    const std::size_t stop = i + 1 < hits.size() ? hits[i + 1].begin : raw.size();
    auto& slot = fields[static_cast<unsigned char>(hits[i].label)];
    if (slot) throw MalformedField(std::string(1, hits[i].label), "field appears twice");
    slot = std::string(raw.substr(hits[i].end, stop - hits[i].end));
  }
  auto field = [&](char label) -> std::optional<std::string>& {
    return fields[static_cast<unsigned char>(label)];
  };

  if (!field('E')) throw MissingEField();

  Notam n;
  n.id = std::move(id);
  n.raw_text = std::string(raw);
  n.body = normalize_whitespace(*field('E'));
  if (n.body.empty()) throw MalformedField("E", "empty body");

  if (field('Q')) n.q_line = parse_qline(*field('Q'));
  if (field('A')) {
    auto loc = normalize_whitespace(*field('A'));
    if (!is_icao_code(loc)) throw MalformedField("A", "location '" + loc + "'");
    n.location = std::move(loc);
  }
  if (field('B')) {
    auto from = normalize_whitespace(*field('B'));
    if (!is_timestamp(from)) throw MalformedField("B", "timestamp '" + from + "'");
    n.valid_from = std::move(from);
  }
  if (field('C')) {
    auto to = normalize_whitespace(*field('C'));
    if (to != "PERM" && !is_timestamp(to)) throw MalformedField("C", "timestamp '" + to + "'");
    // YYMMDDHHMM strings order chronologically within one century.
    if (to != "PERM" && n.valid_from && *n.valid_from > to)
      throw MalformedField("C", "validity ends before it starts");
    n.valid_to = std::move(to);
  }
  if (field('D')) n.schedule = normalize_whitespace(*field('D'));
  if (field('F')) n.lower_vertical = normalize_whitespace(*field('F'));
  if (field('G')) n.upper_vertical = normalize_whitespace(*field('G'));
  return n;
}

std::string serialize_notam(const Notam& n) {
  std::string out;
  if (n.q_line) {
    const QLine& q = *n.q_line;
    char limits[16];
    std::snprintf(limits, sizeof limits, "%03d/%03d", q.lower_limit, q.upper_limit);
    out += "Q)" + q.fir + "/" + q.qcode + "/" + q.traffic + "/" + q.purpose + "/" + q.scope + "/" +
           limits + "/";
    if (!q.coordinates_radius.empty()) out += q.coordinates_radius;
    out += '\n';
  }
  std::string abc;
  auto append = [&](const char* label, const std::optional<std::string>& v) {
    if (!v) return;
    if (!abc.empty()) abc += ' ';
    abc += label + *v;
  };
  append("A)", n.location);
  append("B)", n.valid_from);
  append("C)", n.valid_to);
  if (!abc.empty()) out += abc + '\n';
  if (n.schedule) out += "D)" + *n.schedule + '\n';
  out += "E)" + n.body;
  if (n.lower_vertical) out += "\nF)" + *n.lower_vertical;
  if (n.upper_vertical) out += "\nG)" + *n.upper_vertical;
  return out;
}

}  // namespace notamkit
