#include "notamkit/graph_query.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "notamkit/error.hpp"

namespace notamkit {

void GraphPattern::validate() const {
  std::set<std::string> declared;
  for (const auto& n : nodes) {
    if (n.var.empty()) throw InvalidPattern("empty variable name");
    if (!declared.insert(n.var).second) throw InvalidPattern("variable '" + n.var + "' declared twice");
  }
  for (const auto& e : edges)
    if (!declared.count(e.from_var) || !declared.count(e.to_var))
      throw InvalidPattern("edge uses an undeclared variable");
  for (const auto& v : return_vars)
    if (!declared.count(v)) throw InvalidPattern("return variable '" + v + "' is not declared");
}

namespace {

class Matcher {
 public:
  Matcher(const KnowledgeGraph& g, const GraphPattern& p) : g_(g), p_(p) {
    assignment_.assign(p.nodes.size(), kUnbound);
    for (const auto& v : p.return_vars) return_slots_.push_back(slot_of(v));
  }

  std::vector<Binding> run() {
    order_ = plan();
    search(0);
    std::sort(results_.begin(), results_.end());
    return std::move(results_);
  }

 private:
  static constexpr std::size_t kUnbound = std::numeric_limits<std::size_t>::max();

  std::size_t slot_of(const std::string& var) const {
    for (std::size_t i = 0; i < p_.nodes.size(); ++i)
      if (p_.nodes[i].var == var) return i;
    return kUnbound;
  }

  bool node_ok(std::size_t slot, std::size_t node) const {
    const auto& c = p_.nodes[slot];
    const auto& n = g_.nodes()[node];
    if (c.label && n.label != *c.label) return false;
    for (const auto& [k, v] : c.filters) {
      const auto it = n.properties.find(k);
      if (it == n.properties.end() || it->second != v) return false;
    }
    return true;
  }

  bool edge_exists(std::size_t from, const std::optional<std::string>& rel, std::size_t to) const {
    for (std::size_t e : g_.out_edges(from))
      if (g_.edge_target(e) == to && (!rel || g_.edges()[e].relation == *rel)) return true;
    return false;
  }

  std::vector<std::size_t> base_candidates(std::size_t slot) const {
    const auto& c = p_.nodes[slot];
    if (c.label && !c.filters.empty()) {
      const auto& [k, v] = *c.filters.begin();
      return g_.nodes_with_property(*c.label, k, v);
    }
    if (c.label) return g_.nodes_with_label(*c.label);
    std::vector<std::size_t> all(g_.node_count());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }

  // Greedy order: most selective unbound slot first, preferring slots
  // adjacent to already-ordered ones.
  std::vector<std::size_t> plan() const {
    std::vector<std::size_t> order;
    std::vector<bool> placed(p_.nodes.size(), false);
    while (order.size() < p_.nodes.size()) {
      std::size_t best = kUnbound, best_cost = kUnbound;
      bool best_adjacent = false;
      for (std::size_t s = 0; s < p_.nodes.size(); ++s) {
        if (placed[s]) continue;
        bool adjacent = false;
        for (const auto& e : p_.edges) {
          const auto a = slot_of(e.from_var), b = slot_of(e.to_var);
          if ((a == s && placed[b]) || (b == s && placed[a])) adjacent = true;
        }
        const std::size_t cost = base_candidates(s).size();
        if (best == kUnbound || (adjacent && !best_adjacent) ||
            (adjacent == best_adjacent && cost < best_cost)) {
          best = s;
          best_cost = cost;
          best_adjacent = adjacent;
        }
      }
      placed[best] = true;
      order.push_back(best);
    }
    return order;
  }

  std::vector<std::size_t> candidates(std::size_t slot) const {
    // Expand from a bound neighbour when one exists.
    for (const auto& e : p_.edges) {
      const auto a = slot_of(e.from_var), b = slot_of(e.to_var);
      if (b == slot && a != slot && assignment_[a] != kUnbound) {
        std::vector<std::size_t> out;
        for (std::size_t ei : g_.out_edges(assignment_[a]))
          if (!e.relation || g_.edges()[ei].relation == *e.relation) out.push_back(g_.edge_target(ei));
        return out;
      }
      if (a == slot && b != slot && assignment_[b] != kUnbound) {
        std::vector<std::size_t> out;
        for (std::size_t ei : g_.in_edges(assignment_[b]))
          if (!e.relation || g_.edges()[ei].relation == *e.relation) out.push_back(g_.edge_source(ei));
        return out;
      }
    }
    return base_candidates(slot);
  }

  bool consistent(std::size_t slot) const {
    for (const auto& e : p_.edges) {
      const auto a = slot_of(e.from_var), b = slot_of(e.to_var);
      if (a != slot && b != slot) continue;
      if (assignment_[a] == kUnbound || assignment_[b] == kUnbound) continue;
      if (!edge_exists(assignment_[a], e.relation, assignment_[b])) return false;
    }
    return true;
  }

  void search(std::size_t depth) {
    if (depth == order_.size()) {
      Binding b;
      b.reserve(return_slots_.size());
      for (std::size_t s : return_slots_) b.push_back(g_.nodes()[assignment_[s]].id);
      results_.push_back(std::move(b));
      return;
    }
    const std::size_t slot = order_[depth];
    auto cands = candidates(slot);
    // Parallel edges with different relations can yield a node twice.
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
    for (std::size_t node : cands) {
      if (!node_ok(slot, node)) continue;
      assignment_[slot] = node;
      if (consistent(slot)) search(depth + 1);
      assignment_[slot] = kUnbound;
    }
  }

  const KnowledgeGraph& g_;
  const GraphPattern& p_;
  std::vector<std::size_t> assignment_;
  std::vector<std::size_t> return_slots_;
  std::vector<std::size_t> order_;
  std::vector<Binding> results_;
};

}  // namespace

std::vector<Binding> query_graph(const KnowledgeGraph& graph, const GraphPattern& pattern) {
  pattern.validate();
  return Matcher(graph, pattern).run();
}

}  // namespace notamkit
