#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "notamkit/knowledge.hpp"

namespace notamkit {

/// Conjunctive one-hop pattern: `(v:Label {k=v, ...})` node constraints and
/// `(a)-[REL]->(b)` edge constraints. An unset label or relation matches
/// anything. Distinct variables may bind the same node.
struct GraphPattern {
  struct NodeConstraint {
    std::string var;
    std::optional<std::string> label;
    std::map<std::string, std::string> filters;
  };
  struct EdgeConstraint {
    std::string from_var;
    std::optional<std::string> relation;
    std::string to_var;
  };

  std::vector<NodeConstraint> nodes;
  std::vector<EdgeConstraint> edges;
  std::vector<std::string> return_vars;

  /// Throws InvalidPattern for undeclared or duplicated variables.
  void validate() const;
};

/// One result row: node id per returned variable, in return_vars order.
using Binding = std::vector<std::string>;

/// Every assignment satisfying all constraints, projected onto return_vars
/// and sorted by node ids. Duplicates from the projection are kept.
std::vector<Binding> query_graph(const KnowledgeGraph& graph, const GraphPattern& pattern);

}  // namespace notamkit
