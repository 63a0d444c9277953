#include "genrl/abstract_graph.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <sstream>

namespace genrl {

bool region_contains(const Region& r, std::span<const double> state) {
  return !r || eval_predicate(*r, state);
}

bool AbstractGraph::is_final(std::size_t u) const {
  return std::find(finals.begin(), finals.end(), u) != finals.end();
}

std::vector<std::size_t> AbstractGraph::out_edges(std::size_t u) const {
  std::vector<std::size_t> out;
  for (std::size_t e = 0; e < edges.size(); ++e)
    if (edges[e].from == u) out.push_back(e);
  std::stable_sort(out.begin(), out.end(),
                   [&](std::size_t a, std::size_t b) { return edges[a].to < edges[b].to; });
  return out;
}

std::vector<std::size_t> AbstractGraph::in_edges(std::size_t u) const {
  std::vector<std::size_t> out;
  for (std::size_t e = 0; e < edges.size(); ++e)
    if (edges[e].to == u) out.push_back(e);
  std::stable_sort(out.begin(), out.end(),
                   [&](std::size_t a, std::size_t b) { return edges[a].from < edges[b].from; });
  return out;
}

std::optional<std::size_t> AbstractGraph::find_edge(std::size_t v, std::size_t u) const {
  for (std::size_t e = 0; e < edges.size(); ++e)
    if (edges[e].from == v && edges[e].to == u) return e;
  return std::nullopt;
}

std::vector<std::size_t> AbstractGraph::topological_order() const {
  std::size_t n = vertex_count();
  std::vector<std::size_t> indeg(n, 0);
  for (const auto& e : edges) ++indeg[e.to];
  std::set<std::size_t> ready;
  for (std::size_t u = 0; u < n; ++u)
    if (indeg[u] == 0) ready.insert(u);
  std::vector<std::size_t> order;
  while (!ready.empty()) {
    std::size_t u = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(u);
    for (const auto& e : edges)
      if (e.from == u && --indeg[e.to] == 0) ready.insert(e.to);
  }
  if (order.size() != n) throw ConsistencyError("abstract graph contains a cycle");
  return order;
}

std::vector<std::size_t> AbstractGraph::branching_vertices() const {
  std::vector<std::size_t> out;
  for (std::size_t u = 0; u < vertex_count(); ++u)
    if (out_edges(u).size() > 1) out.push_back(u);
  return out;
}

void AbstractGraph::validate() const {
  std::size_t n = vertex_count();
  if (n == 0) throw ConsistencyError("abstract graph has no vertices");
  if (final_safety.size() != n) throw ConsistencyError("final_safety must have one entry per vertex");
  for (const auto& e : edges) {
    if (e.from >= n || e.to >= n) throw ConsistencyError("edge references a missing vertex");
    if (e.to == initial()) throw ConsistencyError("edge enters the initial vertex");
  }
  if (finals.empty()) throw ConsistencyError("abstract graph has no final vertex");
  for (auto f : finals)
    if (f >= n) throw ConsistencyError("final references a missing vertex");
  topological_order();
  std::vector<bool> seen(n, false);
  std::deque<std::size_t> queue{initial()};
  seen[initial()] = true;
  while (!queue.empty()) {
    std::size_t u = queue.front();
    queue.pop_front();
    for (const auto& e : edges)
      if (e.from == u && !seen[e.to]) {
        seen[e.to] = true;
        queue.push_back(e.to);
      }
  }
  for (std::size_t u = 0; u < n; ++u)
    if (!seen[u]) throw ConsistencyError("vertex " + std::to_string(u) + " is unreachable");
}

// ---------------------------------------------------------------------------

namespace {

AbstractGraph leaf(const AtomicPredicate& b) {
  AbstractGraph g;
  g.regions = {std::nullopt, b};
  g.edges = {GraphEdge{0, 1, {}}};
  g.finals = {1};
  g.final_safety.resize(2);
  return g;
}

// Appends the non-initial vertices of `src` to `dst`; returns the index map.
std::vector<std::size_t> append_body(AbstractGraph& dst, const AbstractGraph& src) {
  std::vector<std::size_t> map(src.vertex_count(), 0);
  for (std::size_t u = 1; u < src.vertex_count(); ++u) {
    map[u] = dst.regions.size();
    dst.regions.push_back(src.regions[u]);
    dst.final_safety.push_back(src.final_safety[u]);
  }
  return map;
}

AbstractGraph compile(const Spec& s) {
  switch (s.kind()) {
    case SpecKind::Achieve:
      return leaf(s.predicate());
    case SpecKind::Ensuring: {
      AbstractGraph g = compile(s.lhs());
      for (auto& e : g.edges) e.safety.push_back(s.predicate());
      for (auto f : g.finals) g.final_safety[f].push_back(s.predicate());
      return g;
    }
    case SpecKind::Seq: {
      AbstractGraph g = compile(s.lhs());
      AbstractGraph h = compile(s.rhs());
      auto first_finals = g.finals;
      for (auto f : first_finals) g.final_safety[f].clear();
      auto map = append_body(g, h);
      for (const auto& e : h.edges) {
        if (e.from == AbstractGraph::initial()) {
          for (auto f : first_finals) g.edges.push_back(GraphEdge{f, map[e.to], e.safety});
        } else {
          g.edges.push_back(GraphEdge{map[e.from], map[e.to], e.safety});
        }
      }
      g.finals.clear();
      for (auto f : h.finals) g.finals.push_back(map[f]);
      return g;
    }
    case SpecKind::Choice: {
      AbstractGraph g = compile(s.lhs());
      AbstractGraph h = compile(s.rhs());
      auto map = append_body(g, h);
      for (const auto& e : h.edges)
        g.edges.push_back(GraphEdge{e.from == AbstractGraph::initial() ? AbstractGraph::initial()
                                                                       : map[e.from],
                                    map[e.to], e.safety});
      for (auto f : h.finals) g.finals.push_back(map[f]);
      return g;
    }
  }
  throw ConsistencyError("unknown spec kind");
}

}  // namespace

AbstractGraph compile_spec(const Spec& spec) {
  AbstractGraph g = compile(spec);
  g.validate();
  return g;
}

GraphInstance instantiate_graph(const AbstractGraph& g, const PredicateUpdate& update,
                                std::size_t i) {
  GraphInstance out{g, i};
  auto upd = [&](AtomicPredicate& p) { p = apply_update(p, update, i); };
  for (auto& r : out.graph.regions)
    if (r) upd(*r);
  for (auto& e : out.graph.edges)
    for (auto& p : e.safety) upd(p);
  for (auto& fs : out.graph.final_safety)
    for (auto& p : fs) upd(p);
  return out;
}

// ---------------------------------------------------------------------------
// reach[u][k]: some path u0 -> ... -> u with a valid index sequence ending at
// k_u = k. Safety on [a, b] is answered from per-edge prefix violation counts.

namespace {

std::vector<std::size_t> violation_prefix(const std::vector<AtomicPredicate>& safety,
                                          const Trajectory& traj) {
  std::size_t n = traj.states.size();
  std::vector<std::size_t> pre(n + 1, 0);
  for (std::size_t k = 0; k < n; ++k) {
    bool ok = true;
    for (const auto& p : safety)
      if (!eval_predicate(p, traj.states[k])) {
        ok = false;
        break;
      }
    pre[k + 1] = pre[k] + (ok ? 0 : 1);
  }
  return pre;
}

}  // namespace

bool check_graph_satisfaction(const AbstractGraph& g, const Trajectory& traj) {
  if (traj.states.empty()) throw InvalidInput("trajectory has no states");
  std::size_t n = traj.states.size();
  std::size_t nv = g.vertex_count();
  std::vector<std::vector<char>> in_region(nv, std::vector<char>(n, 0));
  for (std::size_t u = 0; u < nv; ++u)
    for (std::size_t k = 0; k < n; ++k) in_region[u][k] = region_contains(g.regions[u], traj.states[k]);

  std::vector<std::vector<char>> reach(nv, std::vector<char>(n, 0));
  reach[AbstractGraph::initial()][0] = in_region[AbstractGraph::initial()][0];
  for (std::size_t u : g.topological_order()) {
    for (std::size_t e : g.out_edges(u)) {
      const auto& edge = g.edges[e];
      auto pre = violation_prefix(edge.safety, traj);
      std::size_t offset = (u == AbstractGraph::initial()) ? 0 : 1;
      for (std::size_t kv = 0; kv < n; ++kv) {
        if (!reach[u][kv]) continue;
        for (std::size_t ku = kv + offset; ku < n; ++ku) {
          if (pre[ku + 1] != pre[kv]) break;  // segment [kv, ku] unsafe, and stays so
          if (in_region[edge.to][ku]) reach[edge.to][ku] = 1;
        }
      }
    }
  }
  for (std::size_t f : g.finals) {
    auto pre = violation_prefix(g.final_safety[f], traj);
    for (std::size_t k = 0; k < n; ++k)
      if (reach[f][k] && pre[n] == pre[k]) return true;
  }
  return false;
}

std::string region_label(const Region& r) {
  if (!r) return "init";
  return r->label.empty() ? to_string(*r) : r->label;
}

std::string to_dot(const AbstractGraph& g) {
  std::ostringstream os;
  os << "digraph G {\n";
  for (std::size_t u = 0; u < g.vertex_count(); ++u) {
    os << "  v" << u << " [label=\"" << u << ": " << region_label(g.regions[u]) << "\"";
    if (g.is_final(u)) os << ", shape=doublecircle";
    os << "];\n";
  }
  for (const auto& e : g.edges) {
    os << "  v" << e.from << " -> v" << e.to;
    if (!e.safety.empty()) {
      os << " [label=\"";
      for (std::size_t k = 0; k < e.safety.size(); ++k)
        os << (k ? ", " : "") << to_string(e.safety[k]);
      os << "\"]";
    }
    os << ";\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace genrl
