#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "genrl/abstract_graph.hpp"
#include "genrl/decision_tree.hpp"
#include "genrl/policy.hpp"
#include "genrl/tasks.hpp"
#include "genrl/trainer.hpp"

namespace genrl {

/// (edge id, instance) -> estimated edge success. Missing entries count as 0.
using EdgeProbs = std::map<std::pair<std::size_t, std::size_t>, double>;

/// Best path probabilities P(u, i) and their argmax predecessors bestIn(u, i).
struct ReachTables {
  std::map<std::pair<std::size_t, std::size_t>, double> prob;
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> best_in;

  double p(std::size_t u, std::size_t i) const;
  const std::vector<std::size_t>& best(std::size_t u, std::size_t i) const;
};

/// Fills P(u, i) and bestIn(u, i) for one vertex; predecessors must be done.
void compute_vertex_tables(ReachTables& tables, const AbstractGraph& g, std::size_t u,
                           const EdgeProbs& probs, const std::vector<std::size_t>& train);

/// DP over the whole graph in topological order. bestIn keeps every argmax
/// predecessor, in increasing vertex order.
ReachTables compute_reach_tables(const AbstractGraph& g, const EdgeProbs& probs,
                                 const std::vector<std::size_t>& train);

/// edge id -> instances whose best path uses the edge.
using DecisionSets = std::map<std::size_t, std::vector<std::size_t>>;

/// Reverse traversal from the sinks. Instance i is added to D(v -> u) when v is
/// in bestIn(u, i) and u itself lies on a best path of i; a final lies on one
/// when its P equals the best P over all finals and is positive.
DecisionSets build_decision_sets(const AbstractGraph& g, const ReachTables& tables,
                                 const std::vector<std::size_t>& train);

/// Guard dataset for vertex u: instances in out-edge order (by target vertex),
/// each labeled with the first out-edge whose decision set contains it.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> guard_dataset(
    const AbstractGraph& g, std::size_t u, const DecisionSets& sets);

/// One CART tree per branching vertex. Throws UnguardableVertex when a
/// branching vertex has no instance on any out-edge.
std::map<std::size_t, DecisionTree> learn_guards(const AbstractGraph& g, const DecisionSets& sets,
                                                 const std::map<std::size_t, Vec>& features,
                                                 std::size_t max_depth = 4);

/// Human-readable guard: `i <= 4 ? e1 : e2` with edges named by id.
std::string guard_expression(const DecisionTree& tree, GuardFeatures mode);

// ---------------------------------------------------------------------------

/// Rolls the edge policy of each predecessor w in `best_in` from the induced
/// distribution at w and pools the states where the rollout first safely
/// enters the region of u, round-robin across predecessors, up to n_particles.
/// Throws EmptyDistribution when no rollout enters.
InitDistribution induce_distribution(std::size_t u, std::size_t i,
                                     const std::vector<std::size_t>& best_in,
                                     const AbstractGraph& instance_graph, const RLTask& task,
                                     const PolicyShape& shape,
                                     const std::map<std::size_t, PolicyParams>& edge_params,
                                     const std::map<std::size_t, InitDistribution>& vertex_dists,
                                     std::size_t n_particles, std::size_t max_steps,
                                     std::uint64_t seed);

enum class TrainMode { GenRL, Base1, Base2, Base3 };

std::string_view train_mode_name(TrainMode mode);
TrainMode parse_train_mode(std::string_view name);

struct GenrlConfig {
  ArsConfig ars;
  std::size_t degree = 1;
  KappaPolynomial::Template templ = KappaPolynomial::Template::Polynomial;
  GuardFeatures guard_features = GuardFeatures::TaskIndex;
  std::size_t n_particles = 100;
  std::size_t hidden1 = 32;
  std::size_t hidden2 = 32;
  std::size_t guard_max_depth = 4;
};

struct EdgeReport {
  std::size_t edge = 0;
  std::size_t from = 0, to = 0;
  /// Instances with an induced distribution at the source vertex.
  std::vector<std::size_t> available;
  /// Instance the base policy was trained on (GenRL only).
  std::optional<std::size_t> base_instance;
  double base_score = 0.0;
  double base_success = 0.0;
  /// Instances kept for kappa training.
  std::vector<std::size_t> train_e;
  double kappa_score = 0.0;
  std::vector<ArsIterRecord> base_trace;
  std::vector<ArsIterRecord> kappa_trace;
};

struct GenrlResult {
  PolicyGenerator generator;
  ReachTables tables;
  EdgeProbs probs;
  DecisionSets sets;
  std::vector<EdgeReport> edges;
  std::map<std::size_t, std::string> guard_expressions;
  std::vector<std::string> warnings;
  /// Wall-clock seconds per phase.
  std::map<std::string, double> timing;
};

/// GenRL for mode GenRL; the shared-policy baselines otherwise. Baselines get
/// the GenRL iteration budget (max_iters + kappa_max_iters) per edge.
GenrlResult train_generator(const InductiveTask& task, const std::vector<std::size_t>& train,
                            const GenrlConfig& cfg, TrainMode mode);

inline GenrlResult run_genrl(const InductiveTask& task, const std::vector<std::size_t>& train,
                             const GenrlConfig& cfg) {
  return train_generator(task, train, cfg, TrainMode::GenRL);
}

inline GenrlResult train_baseline(TrainMode mode, const InductiveTask& task,
                                  const std::vector<std::size_t>& train, const GenrlConfig& cfg) {
  return train_generator(task, train, cfg, mode);
}

}  // namespace genrl
