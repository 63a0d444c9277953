#pragma once

#include <optional>
#include <string>
#include <vector>

#include "genrl/spec_lang.hpp"

namespace genrl {

/// Subgoal region of a vertex. std::nullopt is the `init` region, which every
/// state satisfies (it stands for the support of the initial distribution).
using Region = std::optional<AtomicPredicate>;

bool region_contains(const Region& r, std::span<const double> state);

struct GraphEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  /// Per-state predicates that must hold on the whole edge segment.
  std::vector<AtomicPredicate> safety;
};

/// DAG of subgoal regions. Vertex 0 is the initial vertex.
struct AbstractGraph {
  std::vector<Region> regions;
  std::vector<GraphEdge> edges;
  std::vector<std::size_t> finals;
  /// Tail-safety predicates per vertex; only consulted for finals.
  std::vector<std::vector<AtomicPredicate>> final_safety;

  std::size_t vertex_count() const { return regions.size(); }
  static constexpr std::size_t initial() { return 0; }
  bool is_final(std::size_t u) const;

  /// Edge ids leaving u, ordered by target vertex index.
  std::vector<std::size_t> out_edges(std::size_t u) const;
  /// Edge ids entering u, ordered by source vertex index.
  std::vector<std::size_t> in_edges(std::size_t u) const;
  /// Edge id of v -> u, if present.
  std::optional<std::size_t> find_edge(std::size_t v, std::size_t u) const;

  /// Kahn order, smallest index first among ready vertices.
  std::vector<std::size_t> topological_order() const;
  std::vector<std::size_t> branching_vertices() const;

  /// Throws ConsistencyError on a cycle, an edge into the initial vertex, an
  /// unreachable vertex, a dangling index or a missing final.
  void validate() const;
};

AbstractGraph compile_spec(const Spec& spec);

struct GraphInstance {
  AbstractGraph graph;
  std::size_t index = 0;
};

/// Applies the predicate update `i` times to every region and safety predicate.
GraphInstance instantiate_graph(const AbstractGraph& g, const PredicateUpdate& update,
                                std::size_t i);

/// Whether some root-to-final path and index sequence 0 = k0 <= k1 < ... <= t
/// witnesses the trajectory (region visits, edge-segment safety, tail safety).
bool check_graph_satisfaction(const AbstractGraph& g, const Trajectory& traj);
inline bool check_graph_satisfaction(const GraphInstance& g, const Trajectory& traj) {
  return check_graph_satisfaction(g.graph, traj);
}

std::string region_label(const Region& r);
std::string to_dot(const AbstractGraph& g);

}  // namespace genrl
