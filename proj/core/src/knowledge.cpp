#include "notamkit/knowledge.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "notamkit/error.hpp"
#include "text_util.hpp"

namespace notamkit {

namespace {
const std::vector<std::size_t> kNoNodes;

std::string property_key(const std::string& label, const std::string& key, const std::string& value) {
  return label + '\x1f' + key + '\x1f' + value;
}
}  // namespace

const std::string& GraphNode::display_name() const {
  const auto it = properties.find("name");
  return it == properties.end() ? id : it->second;
}

KnowledgeGraph KnowledgeGraph::build(std::vector<GraphNode> nodes, std::vector<GraphEdge> edges) {
  KnowledgeGraph g;
  g.nodes_ = std::move(nodes);
  g.edges_ = std::move(edges);
  g.out_.resize(g.nodes_.size());
  g.in_.resize(g.nodes_.size());
  for (std::size_t i = 0; i < g.nodes_.size(); ++i) {
    const auto& n = g.nodes_[i];
    if (!g.by_id_.emplace(n.id, i).second) throw Error("duplicate node id '" + n.id + "'");
    g.by_label_[n.label].push_back(i);
    for (const auto& [k, v] : n.properties) g.by_property_[property_key(n.label, k, v)].push_back(i);
  }
  std::set<std::tuple<std::string, std::string, std::string>> triples;
  for (std::size_t e = 0; e < g.edges_.size(); ++e) {
    const auto& edge = g.edges_[e];
    const auto from = g.find(edge.from);
    const auto to = g.find(edge.to);
    if (!from || !to) throw DanglingEdge(edge.from, edge.relation, edge.to);
    if (!triples.emplace(edge.from, edge.relation, edge.to).second)
      throw Error("duplicate edge " + edge.from + " -[" + edge.relation + "]-> " + edge.to);
    g.edge_from_.push_back(*from);
    g.edge_to_.push_back(*to);
    g.out_[*from].push_back(e);
    g.in_[*to].push_back(e);
  }
  return g;
}

KnowledgeGraph KnowledgeGraph::parse(std::string_view text, const std::string& source) {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;
  std::set<std::string> ids;
  std::set<std::tuple<std::string, std::string, std::string>> triples;
  std::string snapshot;
  std::size_t line_no = 0;
  for (const auto& raw : detail::split_lines(text)) {
    ++line_no;
    const std::string line = detail::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto cols = detail::split(raw, '\t');
    for (auto& c : cols) c = detail::trim(c);
    const std::string where = source + ":" + std::to_string(line_no);
    if (cols[0] == "SNAPSHOT") {
      if (cols.size() != 2) throw FormatError(source, line_no, "SNAPSHOT takes one value");
      snapshot = cols[1];
    } else if (cols[0] == "NODE") {
      if (cols.size() < 3 || cols[1].empty() || cols[2].empty())
        throw FormatError(source, line_no, "NODE needs id and label");
      GraphNode n{cols[1], cols[2], {}, where};
      for (std::size_t i = 3; i < cols.size(); ++i) {
        if (cols[i].empty()) continue;
        const auto eq = cols[i].find('=');
        if (eq == std::string::npos || eq == 0)
          throw FormatError(source, line_no, "property must be key=value");
        n.properties[cols[i].substr(0, eq)] = cols[i].substr(eq + 1);
      }
      if (!ids.insert(n.id).second) throw FormatError(source, line_no, "duplicate node id '" + n.id + "'");
      nodes.push_back(std::move(n));
    } else if (cols[0] == "EDGE") {
      if (cols.size() != 4 || cols[1].empty() || cols[2].empty() || cols[3].empty())
        throw FormatError(source, line_no, "EDGE needs from, relation, to");
      if (!triples.emplace(cols[1], cols[2], cols[3]).second)
        throw FormatError(source, line_no, "duplicate edge");
      edges.push_back({cols[1], cols[2], cols[3], where});
    } else {
      throw FormatError(source, line_no, "unknown record kind '" + cols[0] + "'");
    }
  }
  auto g = build(std::move(nodes), std::move(edges));
  g.snapshot_ = snapshot;
  return g;
}

KnowledgeGraph KnowledgeGraph::load(const std::filesystem::path& path) {
  return parse(detail::read_file(path), path.string());
}

std::optional<std::size_t> KnowledgeGraph::find(std::string_view id) const {
  const auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

const std::vector<std::size_t>& KnowledgeGraph::nodes_with_label(const std::string& label) const {
  const auto it = by_label_.find(label);
  return it == by_label_.end() ? kNoNodes : it->second;
}

const std::vector<std::size_t>& KnowledgeGraph::nodes_with_property(const std::string& label,
                                                                    const std::string& key,
                                                                    const std::string& value) const {
  const auto it = by_property_.find(property_key(label, key, value));
  return it == by_property_.end() ? kNoNodes : it->second;
}

// --- tables ----------------------------------------------------------------

std::optional<std::size_t> ReferenceTable::column_index(std::string_view column) const {
  const auto it = std::find(columns.begin(), columns.end(), column);
  if (it == columns.end()) return std::nullopt;
  return static_cast<std::size_t>(it - columns.begin());
}

void ReferenceTable::add_row(std::vector<std::string> row, std::string source) {
  if (row.size() != columns.size())
    throw FormatError(source, 0, "row has " + std::to_string(row.size()) + " values, expected " +
                                     std::to_string(columns.size()));
  rows.push_back(std::move(row));
  row_sources.push_back(std::move(source));
}

ReferenceTable ReferenceTable::parse(std::string_view text, const std::string& name,
                                     const std::string& source) {
  ReferenceTable t;
  t.name = name;
  std::size_t line_no = 0;
  bool have_header = false;
  for (const auto& raw : detail::split_lines(text)) {
    ++line_no;
    const std::string line = detail::trim(raw);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(':');
      if (colon == std::string::npos) continue;
      const std::string key = detail::trim(line.substr(1, colon - 1));
      const std::string value = detail::trim(line.substr(colon + 1));
      if (key == "keyed_by") {
        for (const auto& k : detail::split(value, ','))
          if (!detail::trim(k).empty()) t.keyed_by.push_back(detail::trim(k));
      } else if (key == "name") {
        t.name = value;
      }
      continue;
    }
    auto cols = detail::split(raw, '\t');
    for (auto& c : cols) c = detail::trim(c);
    if (!have_header) {
      t.columns = std::move(cols);
      have_header = true;
      continue;
    }
    if (cols.size() != t.columns.size())
      throw FormatError(source, line_no,
                        "row has " + std::to_string(cols.size()) + " values, expected " +
                            std::to_string(t.columns.size()));
    t.rows.push_back(std::move(cols));
    t.row_sources.push_back(source + ":" + std::to_string(line_no));
  }
  if (!have_header) throw FormatError(source, line_no, "table has no header row");
  if (t.keyed_by.empty()) throw FormatError(source, 1, "missing '#keyed_by:' metadata line");
  for (const auto& k : t.keyed_by)
    if (!t.column_index(k)) throw FormatError(source, 1, "keyed_by column '" + k + "' not in header");
  return t;
}

ReferenceTable ReferenceTable::load(const std::filesystem::path& path) {
  return parse(detail::read_file(path), path.stem().string(), path.string());
}

KnowledgeStore load_knowledge(const std::filesystem::path& graph_file,
                              const std::vector<std::filesystem::path>& table_files) {
  KnowledgeStore store;
  store.graph = KnowledgeGraph::load(graph_file);
  for (const auto& p : table_files) store.tables.push_back(ReferenceTable::load(p));
  store.snapshot = store.graph.snapshot();
  return store;
}

}  // namespace notamkit
