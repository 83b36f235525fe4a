#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <random>
#include <sstream>

#include "notamkit/error.hpp"
#include "notamkit/multiview.hpp"
#include "notamkit/notam.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace notamkit;
using notamkit::testing::data_path;
using notamkit::testing::kKdenAppendix;
using notamkit::testing::kKdenAppendixOutput;
using notamkit::testing::read_text;

namespace {

/// Answers by variant index through a callback; a null result is a timeout.
class ScriptedBackend final : public Backend {
 public:
  using Fn = std::function<std::optional<RecordList>(std::size_t)>;
  explicit ScriptedBackend(Fn fn) : fn_(std::move(fn)) {}
  std::string id() const override { return "scripted"; }
  GeneratorResponse generate(const GeneratorRequest& r) const override {
    auto out = fn_(r.variant_index);
    if (!out) throw Timeout();
    GeneratorResponse g;
    g.records = *out;
    return g;
  }

 private:
  Fn fn_;
};

RecordList one(const std::string& runway) {
  StructuredRecord r;
  r.airport = "KDEN";
  r.runway = runway;
  r.status = RunwayStatus::Closed;
  return {r};
}

std::vector<std::string> notice_bodies() {
  std::vector<std::string> out;
  std::istringstream in(read_text(data_path("fixtures/notams.txt")));
  std::string block, line;
  auto flush = [&] {
    if (block.find("E)") != std::string::npos) out.push_back(parse_notam(block).body);
    block.clear();
  };
  while (std::getline(in, line)) {
    if (line.empty()) flush();
    else if (line[0] != '#') block += line + "\n";
  }
  flush();
  return out;
}

}  // namespace

TEST(Vote, ExhaustiveFiveViewsOverThreeOutputs) {
  const std::vector<std::string> labels{"A", "B", "C"};
  for (int code = 0; code < 243; ++code) {
    std::vector<std::string> v;
    for (int c = code, i = 0; i < 5; ++i, c /= 3) v.push_back(labels[c % 3]);
    EXPECT_EQ(vote(v), oracle::vote(v));
  }
}

TEST(Vote, PermutationInvariantAndMajority) {
  std::mt19937_64 rng(31);
  const std::vector<std::string> labels{"[]", "[{\"a\":1}]", "[{\"a\":2}]", "[{\"b\":1}]"};
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + oracle::pick(rng, 7);
    std::vector<std::string> v;
    for (std::size_t i = 0; i < n; ++i) v.push_back(labels[oracle::pick(rng, labels.size())]);
    const auto expected = oracle::vote(v);
    std::shuffle(v.begin(), v.end(), rng);
    ASSERT_EQ(vote(v), expected);
    for (const auto& l : labels)
      if (2 * static_cast<std::size_t>(std::count(v.begin(), v.end(), l)) > n) ASSERT_EQ(vote(v), l);
  }
}

TEST(Vote, TieGoesToSmallestSerialization) {
  EXPECT_EQ(vote(std::vector<std::string>{"B", "A", "B", "A"}), "A");
  EXPECT_THROW(vote(std::vector<std::string>{}), Error);
  EXPECT_TRUE(records_equal(vote(std::vector<RecordList>{one("17L"), one("08"), one("17L")}), one("17L")));
}

TEST(Rewrite, ExpandsAbbreviationAndKeepsRunways) {
  const std::string body = "CTAM RWY 17L/35R CLSD";
  bool expanded = false;
  for (std::size_t i = 1; i < 8; ++i) {
    const auto r = rewrite(body, i, 0);
    if (r.text.find("Controller Advisory Message") != std::string::npos) expanded = true;
    EXPECT_NE(r.text.find("RWY"), std::string::npos);
    EXPECT_NE(r.text.find("17L/35R"), std::string::npos);
  }
  EXPECT_TRUE(expanded);
  EXPECT_EQ(rewrite(body, 0, 0).text, body);
}

TEST(Rewrite, NothingToChangeIsNoop) {
  const auto r = rewrite("RWY 09", 1, 0);
  EXPECT_TRUE(r.noop);
  EXPECT_EQ(r.text, "RWY 09");
}

TEST(Rewrite, ProtectedTokensSurviveOnTheCorpus) {
  const auto& rules = RewriteRuleTable::builtin();
  const auto bodies = notice_bodies();
  ASSERT_GE(bodies.size(), 5u);
  for (const auto& b : bodies)
    for (std::size_t i = 0; i < 5; ++i)
      for (std::uint64_t seed : {0u, 1u, 2u})
        EXPECT_EQ(protected_tokens_of(rewrite(b, i, seed, rules).text, rules), protected_tokens_of(b, rules)) << b;
}

TEST(Rewrite, DeterministicPerSeed) {
  const std::string body = parse_notam(kKdenAppendix).body;
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(rewrite(body, i, 4).text, rewrite(body, i, 4).text);
}

TEST(RewriteRules, FileMatchesBuiltinAndValidates) {
  const auto loaded = RewriteRuleTable::load(data_path("rules/rewrite.txt"));
  EXPECT_EQ(loaded.lexical_pairs, RewriteRuleTable::builtin().lexical_pairs);
  EXPECT_THROW(RewriteRuleTable::parse("[protected]\nRWY\n[lexical]\nRWY = RUNWAY\n"), FormatError);
  EXPECT_THROW(RewriteRuleTable::parse("[transforms]\nshuffle\n"), FormatError);
}

TEST(MultiviewInfer, SingleViewIsPlainInference) {
  const auto gold = parse_record_list(kKdenAppendixOutput);
  int calls = 0;
  const ScriptedBackend b([&](std::size_t i) {
    ++calls;
    EXPECT_EQ(i, 0u);
    return std::optional<RecordList>(gold);
  });
  MultiviewOptions o;
  o.views = 1;
  const auto r = multiview_infer(parse_notam(kKdenAppendix), {}, b, RewriteRuleTable::builtin(), o);
  EXPECT_EQ(calls, 1);
  EXPECT_TRUE(records_equal(r.records, gold));
}

TEST(MultiviewInfer, UnanimousAndSplitVotes) {
  const auto n = parse_notam(kKdenAppendix);
  const ScriptedBackend same([](std::size_t) { return std::optional<RecordList>(one("17L")); });
  auto r = multiview_infer(n, {}, same, RewriteRuleTable::builtin(), {});
  EXPECT_EQ(r.winning_votes, 5u);
  EXPECT_EQ(r.variant_bodies.size(), 5u);

  const ScriptedBackend split(
      [](std::size_t i) { return std::optional<RecordList>(i == 1 || i == 3 ? one("08") : one("17L")); });
  r = multiview_infer(n, {}, split, RewriteRuleTable::builtin(), {});
  EXPECT_TRUE(records_equal(r.records, one("17L")));
  EXPECT_EQ(r.winning_votes, 3u);
}

TEST(MultiviewInfer, FailedViewsAreDroppedUntilQuorumIsLost) {
  const auto n = parse_notam(kKdenAppendix);
  const ScriptedBackend two_fail([](std::size_t i) {
    return i >= 3 ? std::nullopt : std::optional<RecordList>(i == 2 ? one("08") : one("17L"));
  });
  const auto r = multiview_infer(n, {}, two_fail, RewriteRuleTable::builtin(), {});
  EXPECT_TRUE(records_equal(r.records, one("17L")));
  EXPECT_EQ(r.failures.size(), 2u);

  const ScriptedBackend three_fail(
      [](std::size_t i) { return i >= 2 ? std::nullopt : std::optional<RecordList>(one("17L")); });
  EXPECT_THROW(multiview_infer(n, {}, three_fail, RewriteRuleTable::builtin(), {}), MultiviewDegraded);
}

TEST(MultiviewInfer, ConcurrencyDoesNotChangeTheAnswer) {
  const auto n = parse_notam(kKdenAppendix);
  const ScriptedBackend b(
      [](std::size_t i) { return std::optional<RecordList>(i % 2 ? one("08") : one("17L")); });
  MultiviewOptions o;
  o.views = 7;
  const auto serial = multiview_infer(n, {}, b, RewriteRuleTable::builtin(), o);
  o.concurrency = 4;
  const auto parallel = multiview_infer(n, {}, b, RewriteRuleTable::builtin(), o);
  EXPECT_TRUE(records_equal(serial.records, parallel.records));
  EXPECT_EQ(serial.outputs, parallel.outputs);
}
