#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "notamkit/evolve.hpp"
#include "notamkit/gateway.hpp"
#include "notamkit/record.hpp"

namespace notamkit {

/// Paraphrase rules. Sections of the rule file:
///   [lexical]     A = B      bidirectional phrase substitution
///   [expand]      A = B      one-way expansion of an abbreviation
///   [predicates]  WORD       takes a copula under voice alternation
///   [protected]   TOKEN      never altered; "@digits" protects any token
///                            containing a digit
///   [transforms]  ID         order of application: lexical, voice,
///                            reorder, expand
struct RewriteRuleTable {
  std::vector<std::pair<std::string, std::string>> lexical_pairs;
  std::vector<std::pair<std::string, std::string>> expansions;
  std::set<std::string> predicates;
  std::set<std::string> protected_tokens;
  bool protect_digits = false;
  std::vector<std::string> transforms;

  static RewriteRuleTable parse(std::string_view text, const std::string& source = "<memory>");
  static RewriteRuleTable load(const std::filesystem::path& path);
  static const RewriteRuleTable& builtin();

  /// Throws FormatError if a phrase contains a protected token, a transform
  /// id is unknown, or a section is malformed.
  void validate(const std::string& source = "<memory>") const;
  /// Copy with extra protected tokens (e.g. the notice's location code).
  RewriteRuleTable with_protected(const std::vector<std::string>& extra) const;
  bool is_protected(std::string_view token) const;
};

struct RewriteResult {
  std::string text;
  bool noop = false;
  std::vector<std::string> applied;  // transform ids that changed the text
};

/// Variant `index` of a notice body. Index 0 is the original. Other indices
/// pick a non-empty subset of the transforms from a seed-shuffled order; if
/// that subset changes nothing the next subsets are tried, and when none
/// applies the body comes back unchanged with noop set.
RewriteResult rewrite(std::string_view body, std::size_t variant_index, std::uint64_t seed,
                      const RewriteRuleTable& rules = RewriteRuleTable::builtin());

/// Sorted multiset of the protected tokens (trailing punctuation stripped).
std::vector<std::string> protected_tokens_of(std::string_view text, const RewriteRuleTable& rules);

/// Most frequent canonical output; ties go to the smallest serialization.
/// Throws Error on an empty list.
std::string vote(const std::vector<std::string>& serialized);
RecordList vote(const std::vector<RecordList>& candidates);

struct MultiviewOptions {
  std::size_t views = 5;
  std::uint64_t seed = 0;
  std::size_t concurrency = 1;
  std::string template_id{kRunwayStatusTemplate};
  DecodeMode decode = DecodeMode::argmax();
  std::chrono::milliseconds timeout{60000};
};

struct MultiviewResult {
  RecordList records;
  std::vector<std::string> variant_bodies;
  /// Per view: canonical output, or nothing when the call failed.
  std::vector<std::optional<std::string>> outputs;
  std::vector<std::string> failures;
  std::size_t winning_votes = 0;
};

/// Runs the backend on the original notice and views-1 rewrites (same
/// knowledge for all) and votes. Failed views are dropped; fewer than
/// ceil(views/2) survivors raise MultiviewDegraded.
MultiviewResult multiview_infer(const Notam& notam, const KnowledgeBundle& knowledge, const Backend& backend,
                                const RewriteRuleTable& rules, const MultiviewOptions& options,
                                const std::string& input_id = {});

/// Variants for preference augmentation: the row's notice with its body
/// rewritten, skipping no-ops and duplicates.
class RewriteVariantSource final : public VariantSource {
 public:
  explicit RewriteVariantSource(RewriteRuleTable rules = RewriteRuleTable::builtin()) : rules_(std::move(rules)) {}
  std::vector<PolicyInput> variants(const TrainingRow& row, std::size_t count, std::uint64_t seed) const override;

 private:
  RewriteRuleTable rules_;
};

}  // namespace notamkit
