#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace notamkit {

using Vector = std::vector<double>;

/// What the policy conditions on: the notice text (possibly a rewritten
/// variant), the rendered knowledge lines, and the finite set of candidate
/// outputs, each a canonical record-list serialization.
struct PolicyInput {
  std::string id;
  std::string text;
  std::vector<std::string> knowledge;
  std::vector<std::string> candidates;
};

/// Maps (input, candidate) to a fixed-length feature vector.
class Featurizer {
 public:
  virtual ~Featurizer() = default;
  virtual std::size_t dimension() const = 0;
  /// Identifies the feature layout; checkpoints refuse to load across layouts.
  virtual std::string schema() const = 0;
  virtual Vector features(const PolicyInput& input, const std::string& candidate) const = 0;
};

class CandidateEnumerator {
 public:
  virtual ~CandidateEnumerator() = default;
  virtual std::vector<std::string> candidates(const PolicyInput& input) const = 0;
};

/// Returns PolicyInput::candidates unchanged.
class ListedCandidates final : public CandidateEnumerator {
 public:
  std::vector<std::string> candidates(const PolicyInput& input) const override { return input.candidates; }
};

struct DecodeMode {
  enum class Kind { Argmax, Sample };
  Kind kind = Kind::Argmax;
  std::uint64_t seed = 0;

  static DecodeMode argmax() { return {}; }
  static DecodeMode sample(std::uint64_t seed) { return {Kind::Sample, seed}; }
};

/// Stable log(sum(exp(x))) with max subtraction; -inf for an empty span.
double logsumexp(std::span<const double> xs);

/// Log-linear policy over enumerable candidates:
///   log pi(c | x) = theta . phi(x, c) - logsumexp_c' theta . phi(x, c').
/// Values are immutable; updates return a new policy, so a copy taken as a
/// reference is never affected by later training.
class LogLinearPolicy {
 public:
  explicit LogLinearPolicy(std::shared_ptr<const Featurizer> featurizer,
                           std::shared_ptr<const CandidateEnumerator> enumerator = nullptr);

  const Vector& parameters() const noexcept { return theta_; }
  std::size_t dimension() const noexcept { return theta_.size(); }
  const Featurizer& featurizer() const noexcept { return *featurizer_; }
  LogLinearPolicy with_parameters(Vector theta) const;

  /// Validated candidate list: non-empty and duplicate-free.
  std::vector<std::string> candidates(const PolicyInput& input) const;

  double score(const PolicyInput& input, const std::string& candidate) const;
  /// Probabilities aligned with candidates(input).
  std::vector<double> distribution(const PolicyInput& input) const;
  /// Throws UnknownCandidate when candidate is not enumerated for input.
  double log_prob(const PolicyInput& input, const std::string& candidate) const;
  /// phi(x, c) - E_pi[phi(x, .)].
  Vector grad_log_prob(const PolicyInput& input, const std::string& candidate) const;

  /// Argmax breaks exact score ties by the lexicographically smallest
  /// candidate; sample mode draws from the softmax with the given seed.
  std::string generate(const PolicyInput& input, DecodeMode mode = DecodeMode::argmax()) const;

  /// theta' = theta - learning_rate * gradient. Throws NonFiniteGradient.
  LogLinearPolicy apply_update(std::span<const double> gradient, double learning_rate) const;

  /// Versioned flat-vector checkpoint tagged with a hash of the feature schema.
  std::string checkpoint() const;
  /// Throws SchemaMismatch if the checkpoint was written for another schema.
  LogLinearPolicy restore(std::string_view checkpoint_text) const;

 private:
  struct Scored {
    std::vector<std::string> candidates;
    std::vector<Vector> features;
    std::vector<double> scores;
  };
  Scored score_all(const PolicyInput& input) const;

  std::shared_ptr<const Featurizer> featurizer_;
  std::shared_ptr<const CandidateEnumerator> enumerator_;
  Vector theta_;
};

/// FNV-1a 64-bit, used for schema hashes and seed derivation.
std::uint64_t fnv1a(std::string_view text);
/// SplitMix64 finaliser; derives independent seeds from (seed, salt).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace notamkit
