#include "notamkit/retrieval.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "text_util.hpp"

namespace notamkit {

std::string TableRowHit::render() const {
  std::string out = "ROW " + table + ":";
  for (std::size_t i = 0; i < cells.size(); ++i)
    out += (i == 0 ? " " : "; ") + cells[i].first + "=" + cells[i].second;
  return out;
}

std::vector<std::string> KnowledgeBundle::lines() const {
  std::vector<std::string> out;
  for (const auto& f : graph_facts) out.push_back(f.text);
  for (const auto& r : table_rows) out.push_back(r.render());
  return out;
}

GraphPattern airport_neighbourhood_pattern(const std::string& icao) {
  GraphPattern p;
  p.nodes.push_back({"a", "Airport", {{"icao", icao}}});
  p.nodes.push_back({"c", std::nullopt, {}});
  p.edges.push_back({"a", std::nullopt, "c"});
  p.return_vars = {"a", "c"};
  return p;
}

KnowledgeBundle kg_tablerag_retrieve(const Notam& notam, const KnowledgeStore& store,
                                     const QCodeLexicon& lexicon) {
  KnowledgeBundle bundle;
  if (!notam.location) {
    bundle.airport_missing = true;
    bundle.diagnostic = "notice has no location";
    return bundle;
  }
  const std::string& icao = *notam.location;
  const auto& graph = store.graph;
  if (graph.nodes_with_property("Airport", "icao", icao).empty()) {
    bundle.airport_missing = true;
    bundle.diagnostic = "airport " + icao + " not found in knowledge graph";
    return bundle;
  }

  // Graph step: one-hop neighbourhood of the airport, one fact per edge.
  for (const auto& b : query_graph(graph, airport_neighbourhood_pattern(icao))) {
    const std::size_t a = *graph.find(b[0]);
    const std::size_t c = *graph.find(b[1]);
    for (std::size_t e : graph.out_edges(a)) {
      if (graph.edge_target(e) != c) continue;
      const auto& edge = graph.edges()[e];
      KnowledgeFact f;
      f.subject = detail::to_upper(graph.nodes()[a].display_name());
      f.relation = detail::to_upper(edge.relation);
      f.object = detail::to_upper(graph.nodes()[c].display_name());
      f.text = f.subject + " " + f.relation + " " + f.object;
      f.provenance = edge.source;
      bundle.graph_facts.push_back(std::move(f));
    }
  }
  std::sort(bundle.graph_facts.begin(), bundle.graph_facts.end(),
            [](const auto& x, const auto& y) { return std::tie(x.text, x.provenance) < std::tie(y.text, y.provenance); });
  bundle.graph_facts.erase(std::unique(bundle.graph_facts.begin(), bundle.graph_facts.end(),
                                       [](const auto& x, const auto& y) { return x.text == y.text; }),
                           bundle.graph_facts.end());

  // Enriched query: location, Q-code subject, then everything the graph
  // step surfaced.
  std::set<std::string> keys = {detail::to_upper(icao)};
  if (notam.q_line) {
    const auto info = decode_qcode(notam.q_line->qcode, lexicon);
    if (info.subject_label != kUnknownLabel) keys.insert(detail::to_upper(info.subject_label));
  }
  for (const auto& f : bundle.graph_facts) {
    keys.insert(f.subject);
    keys.insert(f.object);
  }
  const std::string body = normalize_whitespace(detail::to_upper(notam.body));

  for (const auto& table : store.tables) {
    std::vector<std::size_t> key_cols;
    for (const auto& k : table.keyed_by) key_cols.push_back(*table.column_index(k));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const auto& row = table.rows[r];
      const bool hit = std::any_of(key_cols.begin(), key_cols.end(), [&](std::size_t c) {
        const std::string v = normalize_whitespace(detail::to_upper(row[c]));
        return !v.empty() && (keys.count(v) || !detail::find_phrase(body, v).empty());
      });
      if (!hit) continue;
      TableRowHit h;
      h.table = table.name;
      for (std::size_t c = 0; c < table.columns.size(); ++c) h.cells.emplace_back(table.columns[c], row[c]);
      h.provenance = table.row_sources[r];
      bundle.table_rows.push_back(std::move(h));
    }
  }
  return bundle;
}

}  // namespace notamkit
