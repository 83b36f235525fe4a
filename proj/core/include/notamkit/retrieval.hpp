#pragma once

#include <string>
#include <vector>

#include "notamkit/graph_query.hpp"
#include "notamkit/knowledge.hpp"
#include "notamkit/notam.hpp"
#include "notamkit/qcode.hpp"

namespace notamkit {

struct KnowledgeFact {
  std::string text;        // "AGGC HAS_RUNWAY RWY 07R"
  std::string subject;     // display name of the source node
  std::string relation;
  std::string object;      // display name of the target node
  std::string provenance;  // "file:line" of the edge
};

struct TableRowHit {
  std::string table;
  std::vector<std::pair<std::string, std::string>> cells;  // column -> value
  std::string provenance;

  /// "ROW runways: icao=ZBAA; runway=RWY 09L"
  std::string render() const;
};

/// Knowledge retrieved for one notice: graph facts plus matched table rows,
/// each carrying provenance.
struct KnowledgeBundle {
  std::vector<KnowledgeFact> graph_facts;
  std::vector<TableRowHit> table_rows;
  /// Set when the notice's location is not in the graph.
  bool airport_missing = false;
  std::string diagnostic;

  bool empty() const noexcept { return graph_facts.empty() && table_rows.empty(); }
  /// Facts then rows, one line each, in a stable order.
  std::vector<std::string> lines() const;
};

/// The graph pattern derived from a notice's location:
/// (a:Airport {icao=LOC})-[*]->(c).
GraphPattern airport_neighbourhood_pattern(const std::string& icao);

/// Graph-then-table retrieval. The location selects the airport and its
/// one-hop neighbourhood; the rendered facts, location, Q-code subject
/// label and body phrases become keys into every table's keyed_by columns.
KnowledgeBundle kg_tablerag_retrieve(const Notam& notam, const KnowledgeStore& store,
                                     const QCodeLexicon& lexicon = QCodeLexicon::builtin());

}  // namespace notamkit
