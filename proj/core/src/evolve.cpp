#include "notamkit/evolve.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <set>

#include "notamkit/error.hpp"
#include "notamkit/record.hpp"
#include "parallel.hpp"

namespace notamkit {

namespace {

bool is_correct(const std::string& candidate, const std::string& gold) {
  try {
    return records_equal(parse_record_list(candidate), parse_record_list(gold));
  } catch (const InvalidRecord&) {
    return false;
  }
}

std::optional<std::string> canonical_or_none(const std::string& candidate) {
  try {
    return canonical_serialize(parse_record_list(candidate));
  } catch (const InvalidRecord&) {
    return std::nullopt;
  }
}

// log(sigmoid(m)) and sigmoid(m) without overflow for large |m|.
double log_sigmoid(double m) { return m >= 0 ? -std::log1p(std::exp(-m)) : m - std::log1p(std::exp(m)); }
double sigmoid(double m) {
  if (m >= 0) return 1.0 / (1.0 + std::exp(-m));
  const double z = std::exp(m);
  return z / (1.0 + z);
}

void axpy(Vector& y, double a, const Vector& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

struct TripleTerm {
  double loss;
  Vector grad;
};

TripleTerm triple_term(const LogLinearPolicy& policy, const LogLinearPolicy& reference,
                       const PreferenceTriple& t, double beta) {
  if (t.chosen == t.rejected) throw DegenerateTriple("chosen equals rejected for '" + t.input_id + "'");
  const double margin =
      beta * ((policy.log_prob(t.input, t.chosen) - reference.log_prob(t.input, t.chosen)) -
              (policy.log_prob(t.input, t.rejected) - reference.log_prob(t.input, t.rejected)));
  TripleTerm out{-log_sigmoid(margin), policy.grad_log_prob(t.input, t.chosen)};
  const Vector gr = policy.grad_log_prob(t.input, t.rejected);
  const double scale = -(1.0 - sigmoid(margin)) * beta;
  for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] = scale * (out.grad[i] - gr[i]);
  return out;
}

double weight_total(const std::vector<PreferenceTriple>& triples, const std::vector<double>& weights) {
  if (triples.empty()) throw Error("preference loss needs at least one triple");
  if (weights.size() != triples.size()) throw Error("one weight per triple required");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error("weights must be finite and non-negative");
    total += w;
  }
  if (total <= 0.0) throw Error("weights sum to zero");
  return total;
}

}  // namespace

void EvolveConfig::validate() const {
  auto fail = [](const std::string& what) { throw InvalidConfig(what); };
  if (max_iterations < 0) fail("max_iterations must be >= 0");
  if (lookback < 1) fail("lookback must be >= 1");
  if (!(error_threshold >= 0.0 && error_threshold <= 1.0)) fail("error_threshold must be in [0, 1]");
  if (augmentation_count < 0) fail("augmentation_count must be >= 0");
  if (!(weight_sharpness >= 0.0) || !std::isfinite(weight_sharpness)) fail("weight_sharpness must be >= 0");
  if (!(dpo_beta > 0.0) || !std::isfinite(dpo_beta)) fail("dpo_beta must be > 0");
  if (!(target_accuracy > 0.0 && target_accuracy <= 1.0)) fail("target_accuracy must be in (0, 1]");
  if (sft_epochs < 1) fail("sft_epochs must be >= 1");
  if (dpo_epochs < 1) fail("dpo_epochs must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be > 0");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) fail("train_fraction must be in (0, 1]");
  if (threads < 1) fail("threads must be >= 1");
}

double error_rate(const ResponsePool& pool, const std::string& input_id, int lookback) {
  if (lookback < 1) throw InvalidConfig("lookback must be >= 1");
  const auto& idx = pool.for_input(input_id);
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(lookback), idx.size());
  if (n == 0) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t k = idx.size() - n; k < idx.size(); ++k) wrong += !pool.entries()[idx[k]].is_correct;
  return static_cast<double>(wrong) / static_cast<double>(n);
}

std::vector<SftExample> build_sft_dataset(const ResponsePool& pool, const std::vector<TrainingRow>& train) {
  std::vector<SftExample> out;
  std::set<std::string> taken;
  for (const auto& row : train) {
    const auto& idx = pool.for_input(row.input_id);
    const bool ever = std::any_of(idx.begin(), idx.end(), [&](std::size_t i) { return pool.entries()[i].is_correct; });
    if (ever && taken.insert(row.input_id).second) out.push_back({row.input_id, row.input, row.gold});
  }
  return out;
}

double sft_loss(const LogLinearPolicy& policy, const std::vector<SftExample>& rows) {
  if (rows.empty()) throw Error("SFT loss needs at least one row");
  double total = 0.0;
  for (const auto& r : rows) {
    try {
      total -= policy.log_prob(r.input, r.gold);
    } catch (const UnknownCandidate&) {
      throw CandidateNotRepresentable("gold output of '" + r.input_id + "' is not a candidate");
    }
  }
  return total / static_cast<double>(rows.size());
}

Vector sft_gradient(const LogLinearPolicy& policy, const std::vector<SftExample>& rows) {
  if (rows.empty()) throw Error("SFT gradient needs at least one row");
  Vector g(policy.dimension(), 0.0);
  const double scale = -1.0 / static_cast<double>(rows.size());
  for (const auto& r : rows) {
    try {
      axpy(g, scale, policy.grad_log_prob(r.input, r.gold));
    } catch (const UnknownCandidate&) {
      throw CandidateNotRepresentable("gold output of '" + r.input_id + "' is not a candidate");
    }
  }
  return g;
}

PreferenceSet build_preference_dataset(const ResponsePool& pool, const std::vector<TrainingRow>& train,
                                       const VariantSource* variants, const EvolveConfig& cfg) {
  PreferenceSet set;
  for (const auto& row : train) {
    const auto& idx = pool.for_input(row.input_id);
    bool has_correct = false;
    std::vector<std::string> rejected;
    for (std::size_t i : idx) {
      const auto& e = pool.entries()[i];
      if (e.is_correct) {
        has_correct = true;
        continue;
      }
      if (!e.candidate) continue;  // failed generation: counted by the error rate, nothing to reject
      auto c = canonical_or_none(*e.candidate);
      if (!c || *c == row.gold) continue;
      // Only outputs the policy can score become rejected responses.
      if (std::find(row.input.candidates.begin(), row.input.candidates.end(), *c) == row.input.candidates.end())
        continue;
      if (std::find(rejected.begin(), rejected.end(), *c) == rejected.end()) rejected.push_back(std::move(*c));
    }
    if (!has_correct || rejected.empty()) continue;

    // Every correct response is canonically equal to the gold output, so the
    // most recent one is represented by row.gold.
    const double xi = error_rate(pool, row.input_id, cfg.lookback);
    for (const auto& r : rejected) {
      set.triples.push_back({row.input_id, row.input, row.gold, r, false});
      set.error_rates.push_back(xi);
      ++set.base;
    }
    if (variants && cfg.augmentation_count > 0 && xi >= cfg.error_threshold) {
      auto vs = variants->variants(row, static_cast<std::size_t>(cfg.augmentation_count),
                                   mix_seed(cfg.seed, fnv1a(row.input_id)));
      if (vs.size() > static_cast<std::size_t>(cfg.augmentation_count)) vs.resize(cfg.augmentation_count);
      for (const auto& v : vs) {
        for (const auto& r : rejected) {
          set.triples.push_back({row.input_id, v, row.gold, r, true});
          set.error_rates.push_back(xi);
          ++set.augmented;
        }
      }
    }
  }
  return set;
}

std::vector<double> curriculum_weights(int e, int E, double beta_weight, const std::vector<double>& xi) {
  if (xi.empty()) throw Error("curriculum weights need at least one input");
  if (e < 0 || E < 1) throw InvalidConfig("curriculum needs e >= 0 and E >= 1");
  const double alpha = std::min(static_cast<double>(e) / static_cast<double>(E), 1.0);
  const double n = static_cast<double>(xi.size());
  const double top = beta_weight * *std::max_element(xi.begin(), xi.end());
  std::vector<double> soft(xi.size());
  double z = 0.0;
  for (std::size_t i = 0; i < xi.size(); ++i) z += soft[i] = std::exp(beta_weight * xi[i] - top);
  std::vector<double> w(xi.size());
  for (std::size_t i = 0; i < xi.size(); ++i) w[i] = (1.0 - alpha) / n + alpha * soft[i] / z;
  return w;
}

LossAndGradient dpo_loss_and_grad(const LogLinearPolicy& policy, const LogLinearPolicy& reference,
                                  const std::vector<PreferenceTriple>& triples,
                                  const std::vector<double>& weights, double beta) {
  const double total = weight_total(triples, weights);
  LossAndGradient out{0.0, Vector(policy.dimension(), 0.0)};
  for (std::size_t i = 0; i < triples.size(); ++i) {
    if (weights[i] == 0.0) continue;
    const auto t = triple_term(policy, reference, triples[i], beta);
    const double p = weights[i] / total;
    out.loss += p * t.loss;
    axpy(out.gradient, p, t.grad);
  }
  return out;
}

LossAndGradient dpo_loss_and_grad_sampled(const LogLinearPolicy& policy, const LogLinearPolicy& reference,
                                          const std::vector<PreferenceTriple>& triples,
                                          const std::vector<double>& weights, double beta,
                                          std::size_t samples, std::uint64_t seed) {
  const double total = weight_total(triples, weights);
  if (samples == 0) throw Error("sampled preference loss needs at least one draw");
  std::vector<double> cdf(weights.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) cdf[i] = acc += weights[i] / total;
  SeededRandom rng(seed);
  LossAndGradient out{0.0, Vector(policy.dimension(), 0.0)};
  const double share = 1.0 / static_cast<double>(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    const double u = rng.uniform();
    auto k = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    k = std::min(k, triples.size() - 1);
    const auto t = triple_term(policy, reference, triples[k], beta);
    out.loss += share * t.loss;
    axpy(out.gradient, share, t.grad);
  }
  return out;
}

std::string PolicyResponder::respond(const LogLinearPolicy& policy, const TrainingRow& row, int iteration,
                                     int phase) const {
  if (!sample_) return policy.generate(row.input);
  const std::uint64_t salt = fnv1a(row.input_id) ^ (static_cast<std::uint64_t>(iteration) << 8) ^
                             static_cast<std::uint64_t>(phase);
  return policy.generate(row.input, DecodeMode::sample(mix_seed(seed_, salt)));
}

double accuracy(const LogLinearPolicy& policy, const std::vector<TrainingRow>& rows) {
  if (rows.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& r : rows) hits += is_correct(policy.generate(r.input), r.gold);
  return static_cast<double>(hits) / static_cast<double>(rows.size());
}

bool check_termination(const LogLinearPolicy& policy, const std::vector<TrainingRow>& test, double eta) {
  if (test.empty()) throw Error("termination check needs a non-empty test split");
  return accuracy(policy, test) >= eta;
}

IterationResult run_iteration(EvolveState& state, const Dataset& data, const EvolveConfig& cfg,
                              const Responder& responder, const VariantSource* variants) {
  const auto started = std::chrono::steady_clock::now();
  const int e = state.iteration + 1;
  IterationResult res;
  IterationMetrics& m = res.metrics;
  m.iteration = e;
  const auto& train = data.train;

  auto generate = [&](const LogLinearPolicy& policy, int phase) {
    std::vector<PoolEntry> batch(train.size());
    std::vector<std::exception_ptr> errors(train.size());
    detail::parallel_for(train.size(), cfg.threads, [&](std::size_t i) {
      PoolEntry en;
      en.input_id = train[i].input_id;
      en.iteration = e;
      en.phase = phase;
      try {
        en.candidate = responder.respond(policy, train[i], e, phase);
        en.is_correct = is_correct(*en.candidate, train[i].gold);
      } catch (const GatewayError& g) {
        en.failure = g.what();
      } catch (...) {
        errors[i] = std::current_exception();
      }
      batch[i] = std::move(en);
    });
    for (std::size_t i = 0; i < errors.size(); ++i) {
      if (!errors[i]) continue;
      try {
        std::rethrow_exception(errors[i]);
      } catch (const std::exception& ex) {
        throw Error("generation failed for input '" + train[i].input_id + "': " + ex.what());
      }
    }
    std::size_t hits = 0;
    for (auto& en : batch) {
      hits += en.is_correct;
      m.generation_failures += !en.candidate.has_value();
      state.pool.append(en);
      res.new_entries.push_back(std::move(en));
    }
    return train.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(train.size());
  };

  const LogLinearPolicy start = state.policy;
  m.phase1_accuracy = generate(start, 1);

  const auto sft = build_sft_dataset(state.pool, train);
  m.sft_rows = sft.size();
  LogLinearPolicy tuned = start;
  if (!sft.empty()) {
    m.sft_loss_before = sft_loss(tuned, sft);
    for (int k = 0; k < cfg.sft_epochs; ++k) tuned = tuned.apply_update(sft_gradient(tuned, sft), cfg.learning_rate);
    m.sft_loss_after = sft_loss(tuned, sft);
  }

  m.phase2_accuracy = generate(tuned, 2);

  for (const auto& row : train) {
    std::size_t good = 0, bad = 0;
    for (std::size_t i : state.pool.for_input(row.input_id)) (state.pool.entries()[i].is_correct ? good : bad)++;
    m.observed_pairs += good * bad;
  }

  const auto prefs = build_preference_dataset(state.pool, train, variants, cfg);
  m.preference_triples = prefs.triples.size();
  m.augmented_triples = prefs.augmented;
  if (prefs.triples.empty()) {
    state.policy = tuned;  // nothing to prefer: keep the SFT policy
  } else {
    const auto weights = curriculum_weights(e, std::max(cfg.max_iterations, 1), cfg.weight_sharpness, prefs.error_rates);
    for (double w : weights) m.inverse_weight_expectation += w > 0.0 ? 1.0 : 0.0;  // sum_x P(x) / P(x)

    LogLinearPolicy policy = tuned;
    m.dpo_loss_before = dpo_loss_and_grad(policy, start, prefs.triples, weights, cfg.dpo_beta).loss;
    for (int k = 0; k < cfg.dpo_epochs; ++k) {
      const auto lg = cfg.dpo_samples == 0
                          ? dpo_loss_and_grad(policy, start, prefs.triples, weights, cfg.dpo_beta)
                          : dpo_loss_and_grad_sampled(policy, start, prefs.triples, weights, cfg.dpo_beta,
                                                      cfg.dpo_samples, mix_seed(cfg.seed, (static_cast<std::uint64_t>(e) << 20) + k));
      policy = policy.apply_update(lg.gradient, cfg.learning_rate);
    }
    m.dpo_loss_after = dpo_loss_and_grad(policy, start, prefs.triples, weights, cfg.dpo_beta).loss;
    m.dpo_skipped = false;
    m.effective_pairs = prefs.triples.size();
    state.policy = std::move(policy);
  }

  state.iteration = e;
  m.pool_size = state.pool.size();
  m.test_accuracy = accuracy(state.policy, data.test);
  m.target_reached = !data.test.empty() && m.test_accuracy >= cfg.target_accuracy;
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return res;
}

EvolveSummary run_evolve(EvolveState& state, const Dataset& data, const EvolveConfig& cfg,
                         const Responder& responder, const VariantSource* variants,
                         const std::function<void(const EvolveState&, const IterationResult&)>& on_iteration) {
  cfg.validate();
  EvolveSummary summary;
  summary.final_test_accuracy = accuracy(state.policy, data.test);
  while (state.iteration < cfg.max_iterations) {
    const auto res = run_iteration(state, data, cfg, responder, variants);
    if (on_iteration) on_iteration(state, res);
    ++summary.iterations_run;
    summary.final_test_accuracy = res.metrics.test_accuracy;
    if (res.metrics.target_reached) {
      summary.target_reached = true;
      break;
    }
  }
  return summary;
}

double theoretical_pairs(double scale_constant, int t, double eta) {
  const double tt = static_cast<double>(t);
  return 9.0 * scale_constant * scale_constant * tt * tt * (1.0 - eta);
}

double calibrate_scale_constant(double observed_pairs, double eta) {
  if (!(eta < 1.0) || !(observed_pairs > 0.0)) return 1.0;
  return std::sqrt(observed_pairs / (9.0 * (1.0 - eta)));
}

ComplexityReport complexity_report(const std::vector<ComplexityInput>& history,
                                   std::optional<double> scale_constant) {
  if (history.empty()) throw Error("complexity report needs at least one iteration");
  ComplexityReport rep;
  rep.scale_constant = scale_constant ? *scale_constant
                                      : calibrate_scale_constant(history.front().observed_pairs,
                                                                 history.front().accuracy);
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& h = history[i];
    ComplexityRow r;
    r.iteration = h.iteration;
    r.theoretical_pairs = h.theoretical_pairs ? *h.theoretical_pairs
                                              : theoretical_pairs(rep.scale_constant, h.iteration, h.accuracy);
    r.observed_pairs = h.observed_pairs;
    r.effective_pairs = h.effective_pairs;
    r.ratio = r.theoretical_pairs > 0.0 ? r.effective_pairs / r.theoretical_pairs : 0.0;
    r.seconds = h.seconds;
    if (i > 0 && history[i - 1].seconds > 0.0) r.scale_factor = h.seconds / history[i - 1].seconds;
    rep.rows.push_back(r);
  }
  return rep;
}

}  // namespace notamkit
