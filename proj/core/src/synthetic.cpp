#include "notamkit/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "notamkit/error.hpp"
#include "notamkit/record.hpp"

namespace notamkit {

Vector SyntheticFeaturizer::features(const PolicyInput& input, const std::string& candidate) const {
  const auto it = table_.find({input.id, candidate});
  if (it == table_.end()) throw UnknownCandidate("no synthetic features for '" + input.id + "'");
  return it->second;
}

void SyntheticFeaturizer::set(const std::string& input_id, const std::string& candidate, Vector phi) {
  if (phi.size() != dimension_) throw Error("synthetic feature vector has wrong length");
  table_[{input_id, candidate}] = std::move(phi);
}

namespace {

std::string airport_code(std::size_t i) {
  std::string code = "ZZ";
  code += static_cast<char>('A' + (i / 26) % 26);
  code += static_cast<char>('A' + i % 26);
  return code;
}

std::string runway_name(std::size_t k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "RWY %02zu", (k * 7) % 36 + 1);
  return buf;
}

}  // namespace

SyntheticTask make_synthetic_task(const SyntheticTaskOptions& opt) {
  if (opt.rows == 0 || opt.candidates < 2 || opt.dimension == 0 || opt.margin < 0)
    throw InvalidConfig("synthetic task needs rows >= 1, candidates >= 2, dimension >= 1, margin >= 0");
  if (opt.rows > 26 * 26 || opt.candidates > 36) throw InvalidConfig("synthetic task too large");

  SeededRandom rng(opt.seed);
  SyntheticTask task;
  task.featurizer = std::make_shared<SyntheticFeaturizer>(opt.dimension);
  task.hidden_weights.resize(opt.dimension);
  double norm = 0.0;
  for (auto& w : task.hidden_weights) {
    w = rng.normal();
    norm += w * w;
  }
  for (auto& w : task.hidden_weights) w /= std::sqrt(norm);

  for (std::size_t i = 0; i < opt.rows; ++i) {
    const std::string icao = airport_code(i);
    char id[32];
    std::snprintf(id, sizeof id, "syn-%03zu", i);

    TrainingRow row;
    row.input_id = id;
    row.input.id = id;
    row.notam = parse_notam("Q)ZZZZ/QFALC/IV/NBO/A/000/999/\nA)" + icao +
                                " B)2601010000 C)2601020000\nE)AD CLSD CASE " + std::to_string(i),
                            id);
    row.input.text = serialize_notam(*row.notam);

    std::vector<std::string> cands;
    for (std::size_t k = 0; k < opt.candidates; ++k) {
      StructuredRecord r;
      r.airport = icao;
      r.runway = runway_name(k);
      cands.push_back(canonical_serialize({r}));
      KnowledgeFact f;
      f.subject = icao;
      f.relation = "HAS_RUNWAY";
      f.object = r.runway;
      f.text = icao + " HAS_RUNWAY " + r.runway;
      f.provenance = "synthetic";
      row.knowledge.graph_facts.push_back(std::move(f));
    }
    row.input.knowledge = row.knowledge.lines();

    // Redraw features until the hidden argmax clears the margin.
    std::vector<Vector> phis;
    std::size_t best = 0;
    while (true) {
      phis.assign(opt.candidates, Vector(opt.dimension));
      std::vector<double> s(opt.candidates, 0.0);
      for (std::size_t k = 0; k < opt.candidates; ++k)
        for (std::size_t j = 0; j < opt.dimension; ++j) {
          phis[k][j] = rng.normal();
          s[k] += task.hidden_weights[j] * phis[k][j];
        }
      best = static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
      double second = -INFINITY;
      for (std::size_t k = 0; k < s.size(); ++k)
        if (k != best) second = std::max(second, s[k]);
      if (s[best] - second >= opt.margin) break;
    }
    for (std::size_t k = 0; k < opt.candidates; ++k) task.featurizer->set(id, cands[k], phis[k]);
    row.gold = cands[best];
    std::sort(cands.begin(), cands.end());
    row.input.candidates = std::move(cands);
    task.rows.push_back(std::move(row));
  }
  return task;
}

}  // namespace notamkit
