#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "notamkit/notam.hpp"
#include "notamkit/policy.hpp"
#include "notamkit/record.hpp"
#include "notamkit/retrieval.hpp"
#include "notamkit/rules.hpp"

namespace notamkit {

/// Policy input for a parsed notice: text is the serialized notice (so a
/// rewritten body travels with its fields), knowledge is the bundle's lines.
PolicyInput make_notam_input(const Notam& notam, const KnowledgeBundle& bundle,
                             std::vector<std::string> candidates, std::string id = {});

/// Runway names the knowledge lines attach to `airport` via HAS_RUNWAY,
/// as written in the graph ("RWY 07R").
std::vector<std::string> knowledge_runways(const std::vector<std::string>& knowledge,
                                           const std::string& airport);

/// Agreement features between a candidate record list and the notice text
/// and knowledge, followed by hashed (field, value) indicators.
class NotamFeaturizer final : public Featurizer {
 public:
  static constexpr std::size_t kAgreementFeatures = 12;
  static constexpr std::size_t kHashBuckets = 16;

  explicit NotamFeaturizer(const RuleSet& rules = RuleSet::builtin()) : rules_(rules) {}

  std::size_t dimension() const override { return kAgreementFeatures + kHashBuckets; }
  std::string schema() const override;
  Vector features(const PolicyInput& input, const std::string& candidate) const override;

 private:
  RuleSet rules_;
};

/// Cross-product of plausible field values (runway sets from the text, from
/// the knowledge, or none; each affect region; with and without the rule
/// aircraft restriction). The gold list, when given, is always first; the
/// result is deduplicated and capped.
std::vector<std::string> enumerate_notam_candidates(const Notam& notam, const KnowledgeBundle& bundle,
                                                    const std::optional<std::string>& gold = std::nullopt,
                                                    std::size_t cap = 32,
                                                    const RuleSet& rules = RuleSet::builtin());

}  // namespace notamkit
