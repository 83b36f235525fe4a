#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace notamkit {

struct QCodeInfo {
  std::string subject_letter_pair;
  std::string subject_label;
  std::string condition_letter_pair;
  std::string condition_label;
  std::string area_letter;
  std::string area_label;
};

inline constexpr std::string_view kUnknownLabel = "UNKNOWN";

/// Letter-pair lexicon for Q-codes. Loaded from a tab-separated data file
/// with columns letter_pair, kind (subject|condition|area), label. A
/// "# version N" comment line records the lexicon version.
class QCodeLexicon {
 public:
  static QCodeLexicon parse(std::string_view text, const std::string& source = "<memory>");
  static QCodeLexicon load(const std::filesystem::path& path);
  /// The lexicon bundled with the library (data/rules/qcodes.tsv).
  static const QCodeLexicon& builtin();

  std::string subject(std::string_view pair) const;
  std::string condition(std::string_view pair) const;
  std::string area(std::string_view letter) const;
  int version() const noexcept { return version_; }
  std::size_t size() const noexcept { return subjects_.size() + conditions_.size() + areas_.size(); }

 private:
  int version_ = 0;
  std::map<std::string, std::string, std::less<>> subjects_;
  std::map<std::string, std::string, std::less<>> conditions_;
  std::map<std::string, std::string, std::less<>> areas_;
};

/// Decodes "Q" + subject pair + condition pair. Unknown pairs map to
/// "UNKNOWN". Throws MalformedQCode unless code matches Q[A-Z]{4}.
QCodeInfo decode_qcode(std::string_view code, const QCodeLexicon& lexicon = QCodeLexicon::builtin());

bool is_qcode(std::string_view code);

}  // namespace notamkit
