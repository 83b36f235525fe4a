#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "notamkit/dataset.hpp"
#include "notamkit/policy.hpp"
#include "notamkit/pool.hpp"

namespace notamkit {

struct EvolveConfig {
  int max_iterations = 10;        // E; zero runs no iterations
  int lookback = 4;               // K', window of the error rate
  double error_threshold = 0.5;   // tau, augmentation trigger
  int augmentation_count = 2;     // N_aug variants per hard input
  double weight_sharpness = 1.0;  // beta_weight of the curriculum softmax
  double dpo_beta = 0.5;
  double target_accuracy = 0.95;  // eta
  int sft_epochs = 30;
  int dpo_epochs = 30;
  double learning_rate = 0.5;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  std::size_t threads = 1;
  /// 0: the DPO expectation is the exact weighted sum over all triples;
  /// otherwise that many triples are drawn per step in proportion to weight.
  std::size_t dpo_samples = 0;

  /// Throws InvalidConfig naming the first field out of range.
  void validate() const;
};

/// Fraction of incorrect responses among the last min(lookback, n) pooled
/// responses for the input; 0 when it has none.
double error_rate(const ResponsePool& pool, const std::string& input_id, int lookback);

struct SftExample {
  std::string input_id;
  PolicyInput input;
  std::string gold;
};

/// One example per training row that has ever had a correct response.
std::vector<SftExample> build_sft_dataset(const ResponsePool& pool, const std::vector<TrainingRow>& train);

/// Mean negative log-likelihood of the gold outputs. Throws
/// CandidateNotRepresentable when a gold output is not a candidate.
double sft_loss(const LogLinearPolicy& policy, const std::vector<SftExample>& rows);
Vector sft_gradient(const LogLinearPolicy& policy, const std::vector<SftExample>& rows);

struct PreferenceTriple {
  std::string input_id;
  PolicyInput input;  // the original input or a rewritten variant of it
  std::string chosen;
  std::string rejected;
  bool augmented = false;
};

/// Produces paraphrased copies of a row's input.
class VariantSource {
 public:
  virtual ~VariantSource() = default;
  /// Up to `count` distinct variants, all different from the original text.
  virtual std::vector<PolicyInput> variants(const TrainingRow& row, std::size_t count,
                                            std::uint64_t seed) const = 0;
};

struct PreferenceSet {
  std::vector<PreferenceTriple> triples;
  /// Error rate of each triple's source input, aligned with triples.
  std::vector<double> error_rates;
  std::size_t base = 0;
  std::size_t augmented = 0;
};

/// For each row with both correct and incorrect responses, the most recent
/// correct response is paired with every distinct incorrect one (first
/// appearance order). Rows whose error rate reaches the threshold add the
/// same pairs on each of up to N_aug variants.
PreferenceSet build_preference_dataset(const ResponsePool& pool, const std::vector<TrainingRow>& train,
                                       const VariantSource* variants, const EvolveConfig& cfg);

/// (1 - a)/N + a * softmax(beta_weight * xi), a = min(e / E, 1).
std::vector<double> curriculum_weights(int e, int E, double beta_weight, const std::vector<double>& xi);

struct LossAndGradient {
  double loss = 0.0;
  Vector gradient;
};

/// Weighted preference loss -sum w_i log sigmoid(beta * margin_i) with the
/// weights normalised to sum to one, and its analytic gradient in theta.
/// Throws DegenerateTriple when chosen equals rejected.
LossAndGradient dpo_loss_and_grad(const LogLinearPolicy& policy, const LogLinearPolicy& reference,
                                  const std::vector<PreferenceTriple>& triples,
                                  const std::vector<double>& weights, double beta);

/// Same objective estimated from `samples` weight-proportional draws.
LossAndGradient dpo_loss_and_grad_sampled(const LogLinearPolicy& policy, const LogLinearPolicy& reference,
                                          const std::vector<PreferenceTriple>& triples,
                                          const std::vector<double>& weights, double beta,
                                          std::size_t samples, std::uint64_t seed);

/// Produces one response for a training row. Gateway failures (GatewayError)
/// are recorded as incorrect entries; any other exception aborts the
/// iteration.
class Responder {
 public:
  virtual ~Responder() = default;
  virtual std::string respond(const LogLinearPolicy& policy, const TrainingRow& row, int iteration,
                              int phase) const = 0;
};

/// Decodes with the policy itself: argmax, or sampling seeded from
/// (seed, iteration, phase, input id).
class PolicyResponder final : public Responder {
 public:
  explicit PolicyResponder(bool sample = false, std::uint64_t seed = 0) : sample_(sample), seed_(seed) {}
  std::string respond(const LogLinearPolicy& policy, const TrainingRow& row, int iteration,
                      int phase) const override;

 private:
  bool sample_;
  std::uint64_t seed_;
};

/// Exact-match accuracy of argmax predictions under records_equal.
double accuracy(const LogLinearPolicy& policy, const std::vector<TrainingRow>& rows);
bool check_termination(const LogLinearPolicy& policy, const std::vector<TrainingRow>& test, double eta);

struct EvolveState {
  LogLinearPolicy policy;
  ResponsePool pool;
  int iteration = 0;  // completed iterations
};

struct IterationMetrics {
  int iteration = 0;
  double phase1_accuracy = 0.0;  // on train, policy at iteration start
  double phase2_accuracy = 0.0;  // on train, after SFT
  double test_accuracy = 0.0;    // after the iteration's updates
  std::size_t sft_rows = 0;
  double sft_loss_before = 0.0;
  double sft_loss_after = 0.0;
  std::size_t preference_triples = 0;
  std::size_t augmented_triples = 0;
  bool dpo_skipped = true;
  double dpo_loss_before = 0.0;
  double dpo_loss_after = 0.0;
  /// Sum over rows of (#correct x #incorrect) pooled responses.
  std::size_t observed_pairs = 0;
  /// Triples actually trained on.
  std::size_t effective_pairs = 0;
  /// E over P of 1/P(x) for the curriculum distribution (diagnostic).
  double inverse_weight_expectation = 0.0;
  std::size_t pool_size = 0;
  std::size_t generation_failures = 0;
  bool target_reached = false;
};

struct IterationResult {
  IterationMetrics metrics;
  std::vector<PoolEntry> new_entries;
  double seconds = 0.0;
};

/// One pass of the refinement loop: generate with the current policy, SFT on
/// correct pairs, regenerate with the SFT policy, then DPO against the
/// start-of-iteration policy if any preference triples exist.
IterationResult run_iteration(EvolveState& state, const Dataset& data, const EvolveConfig& cfg,
                              const Responder& responder, const VariantSource* variants);

struct EvolveSummary {
  int iterations_run = 0;
  bool target_reached = false;
  double final_test_accuracy = 0.0;
};

/// Iterates from state.iteration + 1 up to E, stopping once the test
/// accuracy reaches the target. on_iteration sees the state after each
/// completed iteration (for checkpointing).
EvolveSummary run_evolve(EvolveState& state, const Dataset& data, const EvolveConfig& cfg,
                         const Responder& responder, const VariantSource* variants,
                         const std::function<void(const EvolveState&, const IterationResult&)>& on_iteration = {});

/// 9 K^2 t^2 (1 - eta).
double theoretical_pairs(double scale_constant, int t, double eta);
/// K such that the formula reproduces the observed iteration-1 count;
/// 1 when that is undefined (eta = 1 or no pairs).
double calibrate_scale_constant(double observed_pairs, double eta);

struct ComplexityInput {
  int iteration = 0;
  double accuracy = 0.0;
  double observed_pairs = 0.0;
  double effective_pairs = 0.0;
  double seconds = 0.0;
  /// Replaces the formula value when set (e.g. published figures).
  std::optional<double> theoretical_pairs;
};

struct ComplexityRow {
  int iteration = 0;
  double theoretical_pairs = 0.0;
  double observed_pairs = 0.0;
  double effective_pairs = 0.0;
  double ratio = 0.0;  // effective / theoretical, 0 when theoretical is 0
  double seconds = 0.0;
  double scale_factor = 1.0;  // seconds relative to the previous iteration
};

struct ComplexityReport {
  double scale_constant = 1.0;
  std::vector<ComplexityRow> rows;
};

ComplexityReport complexity_report(const std::vector<ComplexityInput>& history,
                                   std::optional<double> scale_constant = std::nullopt);

}  // namespace notamkit
