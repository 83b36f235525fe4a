#include <benchmark/benchmark.h>

#include <random>

#include "notamkit/evolve.hpp"
#include "notamkit/graph_query.hpp"
#include "notamkit/multiview.hpp"
#include "notamkit/notam.hpp"
#include "notamkit/rules.hpp"
#include "notamkit/synthetic.hpp"

using namespace notamkit;

namespace {

constexpr const char* kNotice =
    "Q)KZDV/QMRLC/IV/NBO/A/000/999/\n3952N10440W005\nA)KDEN B)2301010254 C)2301011200\nE) DEN RWY 17L/35R CLSD\n";

KnowledgeGraph chain_graph(std::size_t airports) {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;
  for (std::size_t a = 0; a < airports; ++a) {
    const std::string ap = "A" + std::to_string(a);
    nodes.push_back({ap, "Airport", {{"icao", ap}}});
    for (int r = 0; r < 4; ++r) {
      const std::string rw = ap + "-R" + std::to_string(r);
      nodes.push_back({rw, "Runway", {}});
      edges.push_back({ap, "HAS_RUNWAY", rw, {}});
    }
  }
  return KnowledgeGraph::build(std::move(nodes), std::move(edges));
}

}  // namespace

static void BM_ParseAndExtract(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(extract_records(parse_notam(kNotice)));
}
BENCHMARK(BM_ParseAndExtract);

static void BM_QueryGraph(benchmark::State& state) {
  const auto g = chain_graph(static_cast<std::size_t>(state.range(0)));
  GraphPattern p;
  p.nodes = {{"a", "Airport", {{"icao", "A1"}}}, {"r", "Runway", {}}};
  p.edges = {{"a", "HAS_RUNWAY", "r"}};
  p.return_vars = {"r"};
  for (auto _ : state) benchmark::DoNotOptimize(query_graph(g, p));
}
BENCHMARK(BM_QueryGraph)->Arg(10)->Arg(100)->Arg(1000);

static void BM_SftGradient(benchmark::State& state) {
  const auto task = make_synthetic_task();
  std::vector<SftExample> rows;
  for (const auto& r : task.rows) rows.push_back({r.input_id, r.input, r.gold});
  const LogLinearPolicy pol(task.featurizer);
  for (auto _ : state) benchmark::DoNotOptimize(sft_gradient(pol, rows));
}
BENCHMARK(BM_SftGradient);

static void BM_DpoLossAndGrad(benchmark::State& state) {
  const auto task = make_synthetic_task();
  std::vector<PreferenceTriple> triples;
  for (const auto& r : task.rows)
    for (const auto& c : r.input.candidates)
      if (c != r.gold) triples.push_back({r.input_id, r.input, r.gold, c, false});
  const std::vector<double> w(triples.size(), 1.0);
  const LogLinearPolicy pol(task.featurizer);
  for (auto _ : state) benchmark::DoNotOptimize(dpo_loss_and_grad(pol, pol, triples, w, 0.5));
}
BENCHMARK(BM_DpoLossAndGrad);

static void BM_Rewrite(benchmark::State& state) {
  const std::string body = "CTAM RWY 17L/35R CLSD TO ACFT WITH WINGSPAN MORE THAN 118FT EXC DEP";
  std::size_t i = 1;
  for (auto _ : state) benchmark::DoNotOptimize(rewrite(body, i++ % 8, 0));
}
BENCHMARK(BM_Rewrite);

static void BM_Vote(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::vector<std::string> v;
  for (int i = 0; i < state.range(0); ++i) v.push_back("[{\"runway\":\"" + std::to_string(rng() % 3) + "\"}]");
  for (auto _ : state) benchmark::DoNotOptimize(vote(v));
}
BENCHMARK(BM_Vote)->Arg(5)->Arg(25);
BENCHMARK_MAIN();
