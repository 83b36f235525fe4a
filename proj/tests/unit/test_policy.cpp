#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "notamkit/dataset.hpp"
#include "notamkit/error.hpp"
#include "notamkit/evolve.hpp"
#include "notamkit/notam_policy.hpp"
#include "notamkit/policy.hpp"
#include "notamkit/synthetic.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace notamkit;

namespace {

struct Problem {
  std::shared_ptr<SyntheticFeaturizer> featurizer;
  PolicyInput input;
  std::vector<Vector> phi;  // aligned with input.candidates
};

Problem random_problem(std::mt19937_64& rng, std::size_t k, std::size_t d, const std::string& id = "x") {
  std::normal_distribution<double> n01(0.0, 1.0);
  Problem p;
  p.featurizer = std::make_shared<SyntheticFeaturizer>(d);
  p.input.id = id;
  for (std::size_t c = 0; c < k; ++c) {
    const std::string cand = "c" + std::to_string(c);
    Vector v(d);
    for (auto& x : v) x = n01(rng);
    p.featurizer->set(id, cand, v);
    p.input.candidates.push_back(cand);
    p.phi.push_back(v);
  }
  return p;
}

Vector random_theta(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Vector t(d);
  for (auto& x : t) x = n01(rng);
  return t;
}

}  // namespace

TEST(LogProb, SingleCandidateIsZero) {
  std::mt19937_64 rng(1);
  auto p = random_problem(rng, 1, 3);
  const auto pol = LogLinearPolicy(p.featurizer).with_parameters(random_theta(rng, 3));
  EXPECT_DOUBLE_EQ(pol.log_prob(p.input, "c0"), 0.0);
}

TEST(LogProb, UniformAtZero) {
  std::mt19937_64 rng(2);
  auto p = random_problem(rng, 4, 5);
  const LogLinearPolicy pol(p.featurizer);
  for (const auto& c : p.input.candidates) EXPECT_NEAR(pol.log_prob(p.input, c), std::log(0.25), 1e-15);
  EXPECT_NEAR(pol.log_prob(p.input, "c0"), -1.3863, 1e-4);
}

TEST(LogProb, MatchesSecondCodePath) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = random_problem(rng, 6, 4);
    const auto theta = random_theta(rng, 4);
    const auto pol = LogLinearPolicy(p.featurizer).with_parameters(theta);
    const auto dist = pol.distribution(p.input);
    double sum = 0.0;
    for (double q : dist) sum += q;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    for (std::size_t k = 0; k < 6; ++k)
      EXPECT_NEAR(pol.log_prob(p.input, p.input.candidates[k]), oracle::direct_log_prob(theta, p.phi, k), 1e-12);
  }
}

TEST(LogProb, UnknownCandidate) {
  std::mt19937_64 rng(4);
  auto p = random_problem(rng, 3, 2);
  const LogLinearPolicy pol(p.featurizer);
  EXPECT_THROW(pol.log_prob(p.input, "nope"), UnknownCandidate);
  EXPECT_THROW(pol.grad_log_prob(p.input, "nope"), UnknownCandidate);
}

TEST(LogProb, LargeScoresStayFinite) {
  std::mt19937_64 rng(5);
  auto p = random_problem(rng, 3, 2);
  const auto pol = LogLinearPolicy(p.featurizer).with_parameters({800.0, -900.0});
  for (const auto& c : p.input.candidates) EXPECT_TRUE(std::isfinite(pol.log_prob(p.input, c)));
}

TEST(Candidates, MustBeNonEmptyAndDistinct) {
  auto f = std::make_shared<SyntheticFeaturizer>(1);
  const LogLinearPolicy pol(f);
  PolicyInput empty{"x", "", {}, {}};
  EXPECT_THROW(pol.candidates(empty), Error);
  PolicyInput dup{"x", "", {}, {"a", "a"}};
  EXPECT_THROW(pol.candidates(dup), Error);
}

TEST(GradLogProb, SingleCandidateIsZero) {
  std::mt19937_64 rng(6);
  auto p = random_problem(rng, 1, 3);
  const auto g = LogLinearPolicy(p.featurizer).with_parameters(random_theta(rng, 3)).grad_log_prob(p.input, "c0");
  for (double x : g) EXPECT_DOUBLE_EQ(x, 0.0);
}

TEST(GradLogProb, HandEvaluated) {
  auto f = std::make_shared<SyntheticFeaturizer>(2);
  f->set("x", "a", {1.0, 0.0});
  f->set("x", "b", {0.0, 1.0});
  const auto g = LogLinearPolicy(f).grad_log_prob(PolicyInput{"x", "", {}, {"a", "b"}}, "a");
  EXPECT_DOUBLE_EQ(g[0], 0.5);
  EXPECT_DOUBLE_EQ(g[1], -0.5);
}

TEST(GradLogProb, MatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    auto p = random_problem(rng, 2 + trial % 5, 3);
    const auto theta = random_theta(rng, 3);
    const LogLinearPolicy base(p.featurizer);
    const std::string c = p.input.candidates[trial % p.input.candidates.size()];
    const auto analytic = base.with_parameters(theta).grad_log_prob(p.input, c);
    const auto numeric =
        oracle::numeric_gradient([&](const Vector& t) { return base.with_parameters(t).log_prob(p.input, c); }, theta);
    EXPECT_LT(oracle::max_relative_error(analytic, numeric), 1e-6) << "trial " << trial;
  }
}

TEST(Generate, DominantScoreWins) {
  auto f = std::make_shared<SyntheticFeaturizer>(1);
  f->set("x", "a", {0.0});
  f->set("x", "gold", {1.0});
  const auto pol = LogLinearPolicy(f).with_parameters({50.0});
  EXPECT_EQ(pol.generate(PolicyInput{"x", "", {}, {"a", "gold"}}), "gold");
}

TEST(Generate, TiesGoToSmallestSerialization) {
  auto f = std::make_shared<SyntheticFeaturizer>(1);
  f->set("x", "b", {1.0});
  f->set("x", "a", {1.0});
  f->set("x", "c", {0.0});
  const auto pol = LogLinearPolicy(f).with_parameters({2.0});
  EXPECT_EQ(pol.generate(PolicyInput{"x", "", {}, {"b", "c", "a"}}), "a");
}

TEST(Generate, SampledFrequenciesMatchDistribution) {
  auto f = std::make_shared<SyntheticFeaturizer>(1);
  for (auto c : {"a", "b", "c"}) f->set("x", c, {0.0});
  const LogLinearPolicy pol(f);
  const PolicyInput in{"x", "", {}, {"a", "b", "c"}};
  std::map<std::string, int> count;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) ++count[pol.generate(in, DecodeMode::sample(static_cast<std::uint64_t>(i)))];
  for (const auto& [c, n] : count) EXPECT_NEAR(static_cast<double>(n) / draws, 1.0 / 3.0, 0.01) << c;
  EXPECT_EQ(pol.generate(in, DecodeMode::sample(9)), pol.generate(in, DecodeMode::sample(9)));
}

TEST(ApplyUpdate, ZeroGradientKeepsTheta) {
  std::mt19937_64 rng(8);
  auto p = random_problem(rng, 3, 4);
  const auto theta = random_theta(rng, 4);
  const auto pol = LogLinearPolicy(p.featurizer).with_parameters(theta);
  EXPECT_EQ(pol.apply_update(Vector(4, 0.0), 0.7).parameters(), theta);
}

TEST(ApplyUpdate, NonFiniteRejected) {
  auto f = std::make_shared<SyntheticFeaturizer>(2);
  const LogLinearPolicy pol(f);
  EXPECT_THROW(pol.apply_update(Vector{1.0, std::nan("")}, 0.1), NonFiniteGradient);
  EXPECT_THROW(pol.apply_update(Vector{INFINITY, 0.0}, 0.1), NonFiniteGradient);
}

TEST(ApplyUpdate, SftStepRaisesGoldLogProb) {
  std::mt19937_64 rng(9);
  auto p = random_problem(rng, 4, 3);
  const auto pol = LogLinearPolicy(p.featurizer).with_parameters(random_theta(rng, 3));
  const std::vector<SftExample> rows{{"x", p.input, "c2"}};
  const auto next = pol.apply_update(sft_gradient(pol, rows), 0.1);
  EXPECT_GT(next.log_prob(p.input, "c2"), pol.log_prob(p.input, "c2"));
}

TEST(ApplyUpdate, TrainsSeparableTaskToPerfectAccuracy) {
  SyntheticTaskOptions opt;
  opt.rows = 10;
  const auto task = make_synthetic_task(opt);
  std::vector<SftExample> rows;
  for (const auto& r : task.rows) rows.push_back({r.input_id, r.input, r.gold});
  LogLinearPolicy pol(task.featurizer);
  for (int step = 0; step < 200; ++step) pol = pol.apply_update(sft_gradient(pol, rows), 0.5);
  EXPECT_DOUBLE_EQ(accuracy(pol, task.rows), 1.0);
}

TEST(Checkpoint, RoundTripAndSchemaGuard) {
  std::mt19937_64 rng(10);
  auto p = random_problem(rng, 3, 4);
  const auto pol = LogLinearPolicy(p.featurizer).with_parameters(random_theta(rng, 4));
  const auto text = pol.checkpoint();
  EXPECT_EQ(LogLinearPolicy(p.featurizer).restore(text).parameters(), pol.parameters());
  EXPECT_THROW(LogLinearPolicy(std::make_shared<SyntheticFeaturizer>(5)).restore(text), SchemaMismatch);
  EXPECT_THROW(LogLinearPolicy(std::make_shared<NotamFeaturizer>()).restore(text), SchemaMismatch);
}

TEST(Logsumexp, StableAndEmpty) {
  const std::vector<double> big{1000.0, 1000.0};
  EXPECT_NEAR(logsumexp(big), 1000.0 + std::log(2.0), 1e-12);
  EXPECT_TRUE(std::isinf(logsumexp(std::vector<double>{})));
}

TEST(NotamFeaturizer, GoldIsFirstCandidateAndFeaturesAreFinite) {
  const Notam n = parse_notam(notamkit::testing::kKdenAppendix);
  const std::string gold = canonical_serialize(parse_record_list(notamkit::testing::kKdenAppendixOutput));
  const auto cands = enumerate_notam_candidates(n, {}, gold);
  ASSERT_FALSE(cands.empty());
  EXPECT_EQ(cands.front(), gold);
  EXPECT_LE(cands.size(), 32u);
  const std::set<std::string> unique(cands.begin(), cands.end());
  EXPECT_EQ(unique.size(), cands.size());
  const NotamFeaturizer f;
  const auto in = make_notam_input(n, {}, cands, "kden");
  for (const auto& c : cands) {
    const auto v = f.features(in, c);
    ASSERT_EQ(v.size(), f.dimension());
    for (double x : v) EXPECT_TRUE(std::isfinite(x));
  }
}

TEST(NotamFeaturizer, KnowledgeRunways) {
  const std::vector<std::string> lines{"AGGC HAS_RUNWAY RWY 07R", "ZBAA HAS_RUNWAY RWY 09L", "ROW runways: icao=AGGC"};
  EXPECT_EQ(knowledge_runways(lines, "AGGC"), (std::vector<std::string>{"RWY 07R"}));
}

TEST(SeededRandom, Reproducible) {
  SeededRandom a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.normal(), b.normal());
  EXPECT_EQ(seeded_permutation(10, 3), seeded_permutation(10, 3));
  auto perm = seeded_permutation(10, 3);
  std::sort(perm.begin(), perm.end());
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(perm[i], i);
}
