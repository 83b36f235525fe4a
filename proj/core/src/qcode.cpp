#include "notamkit/qcode.hpp"

#include <fstream>
#include <sstream>

#include "notamkit/error.hpp"
#include "notamkit/notam.hpp"
#include "notamkit/resources.hpp"
#include "text_util.hpp"

namespace notamkit {

bool is_qcode(std::string_view code) {
  if (code.size() != 5 || code[0] != 'Q') return false;
  for (std::size_t i = 1; i < 5; ++i)
    if (code[i] < 'A' || code[i] > 'Z') return false;
  return true;
}

QCodeLexicon QCodeLexicon::parse(std::string_view text, const std::string& source) {
  QCodeLexicon lex;
  std::size_t line_no = 0;
  for (const auto& raw_line : detail::split_lines(text)) {
    ++line_no;
    const std::string line = detail::trim(raw_line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string_view tag = "# version";
      if (line.rfind(tag, 0) == 0) lex.version_ = std::stoi(line.substr(tag.size()));
      continue;
    }
    const auto cols = detail::split(raw_line, '\t');
    if (cols.size() != 3) throw FormatError(source, line_no, "expected 3 tab-separated columns");
    const std::string key = detail::trim(cols[0]);
    const std::string kind = detail::trim(cols[1]);
    const std::string label = detail::trim(cols[2]);
    if (label.empty()) throw FormatError(source, line_no, "empty label");
    if (kind == "subject" || kind == "condition") {
      if (key.size() != 2 || !detail::all_upper_alpha(key))
        throw FormatError(source, line_no, "letter pair must be two capital letters");
      (kind == "subject" ? lex.subjects_ : lex.conditions_)[key] = label;
    } else if (kind == "area") {
      if (key.size() != 1 || !detail::all_upper_alpha(key))
        throw FormatError(source, line_no, "area must be one capital letter");
      lex.areas_[key] = label;
    } else {
      throw FormatError(source, line_no, "unknown kind '" + kind + "'");
    }
  }
  return lex;
}

QCodeLexicon QCodeLexicon::load(const std::filesystem::path& path) {
  return parse(detail::read_file(path), path.string());
}

const QCodeLexicon& QCodeLexicon::builtin() {
  static const QCodeLexicon lex = parse(resources::qcode_lexicon(), "builtin:qcodes.tsv");
  return lex;
}

namespace {
std::string lookup(const std::map<std::string, std::string, std::less<>>& m, std::string_view key) {
  const auto it = m.find(key);
  return it == m.end() ? std::string(kUnknownLabel) : it->second;
}
}  // namespace

std::string QCodeLexicon::subject(std::string_view pair) const { return lookup(subjects_, pair); }
std::string QCodeLexicon::condition(std::string_view pair) const { return lookup(conditions_, pair); }
std::string QCodeLexicon::area(std::string_view letter) const { return lookup(areas_, letter); }

QCodeInfo decode_qcode(std::string_view code, const QCodeLexicon& lexicon) {
  if (!is_qcode(code)) throw MalformedQCode(std::string(code));
  QCodeInfo info;
  info.subject_letter_pair = std::string(code.substr(1, 2));
  info.condition_letter_pair = std::string(code.substr(3, 2));
  info.area_letter = std::string(code.substr(1, 1));
  info.subject_label = lexicon.subject(info.subject_letter_pair);
  info.condition_label = lexicon.condition(info.condition_letter_pair);
  info.area_label = lexicon.area(info.area_letter);
  return info;
}

}  // namespace notamkit
