#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace notamkit {

struct GraphNode {
  std::string id;
  std::string label;  // Airport, Runway, LightingSystem, ...
  std::map<std::string, std::string> properties;
  std::string source;  // "file:line"

  /// `name` property if present, otherwise the id.
  const std::string& display_name() const;
};

struct GraphEdge {
  std::string from;
  std::string relation;
  std::string to;
  std::string source;
};

/// Typed entity-relation store. Immutable once built; indexes nodes by id,
/// by label and by (label, property, value), and edges by endpoint.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  /// Throws DanglingEdge if an edge endpoint is unknown and InvalidPattern
  /// style errors (as FormatError) for duplicate node ids or edge triples.
  static KnowledgeGraph build(std::vector<GraphNode> nodes, std::vector<GraphEdge> edges);
  static KnowledgeGraph parse(std::string_view text, const std::string& source = "<memory>");
  static KnowledgeGraph load(const std::filesystem::path& path);

  const std::vector<GraphNode>& nodes() const noexcept { return nodes_; }
  const std::vector<GraphEdge>& edges() const noexcept { return edges_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  /// Index into nodes() or nullopt.
  std::optional<std::size_t> find(std::string_view id) const;
  const std::vector<std::size_t>& nodes_with_label(const std::string& label) const;
  const std::vector<std::size_t>& nodes_with_property(const std::string& label, const std::string& key,
                                                      const std::string& value) const;
  /// Edge indices leaving / entering a node index.
  const std::vector<std::size_t>& out_edges(std::size_t node) const { return out_[node]; }
  const std::vector<std::size_t>& in_edges(std::size_t node) const { return in_[node]; }
  std::size_t edge_target(std::size_t edge) const { return edge_to_[edge]; }
  std::size_t edge_source(std::size_t edge) const { return edge_from_[edge]; }

  const std::string& snapshot() const noexcept { return snapshot_; }

 private:
  std::vector<GraphNode> nodes_;
  std::vector<GraphEdge> edges_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
  std::map<std::string, std::vector<std::size_t>> by_label_;
  std::map<std::string, std::vector<std::size_t>> by_property_;  // "label\x1fkey\x1fvalue"
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::vector<std::size_t>> in_;
  std::vector<std::size_t> edge_from_;
  std::vector<std::size_t> edge_to_;
  std::string snapshot_;
};

/// Row-oriented operational table. keyed_by names the columns used as
/// retrieval keys.
struct ReferenceTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> keyed_by;
  std::vector<std::string> row_sources;  // "file:line" per row

  static ReferenceTable parse(std::string_view text, const std::string& name,
                              const std::string& source = "<memory>");
  static ReferenceTable load(const std::filesystem::path& path);

  std::optional<std::size_t> column_index(std::string_view column) const;
  /// Appends a row; throws FormatError on arity mismatch.
  void add_row(std::vector<std::string> row, std::string source);
};

struct KnowledgeStore {
  KnowledgeGraph graph;
  std::vector<ReferenceTable> tables;
  std::string snapshot;  // label of the data snapshot this store was loaded from
};

KnowledgeStore load_knowledge(const std::filesystem::path& graph_file,
                              const std::vector<std::filesystem::path>& table_files);

}  // namespace notamkit
