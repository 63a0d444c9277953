#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <vector>

#include "genrl/abstract_graph.hpp"
#include "genrl/decision_tree.hpp"
#include "genrl/envs.hpp"
#include "genrl/tasks.hpp"

namespace genrl {

/// Two-hidden-layer MLP: ReLU, ReLU, tanh, with the tanh output mapped onto
/// [action_lo, action_hi].
///
/// Flat parameter layout, layer by layer: weights row-major [out][in], then
/// the bias vector.
struct PolicyShape {
  std::size_t input_dim = 0;
  std::size_t hidden1 = 32;
  std::size_t hidden2 = 32;
  std::size_t output_dim = 0;
  /// Appends the task index (scaled by 0.1) to the observation.
  bool include_task_index = false;
  Vec action_lo, action_hi;

  std::size_t network_input_dim() const { return input_dim + (include_task_index ? 1 : 0); }
  std::size_t param_count() const;
  void validate() const;

  static PolicyShape for_env(const Environment& env, bool include_task_index = false,
                             std::size_t hidden1 = 32, std::size_t hidden2 = 32);
};

struct PolicyParams {
  Vec flat;
};

/// Weights ~ N(0, 1/fan_in), zero biases.
PolicyParams init_policy_params(const PolicyShape& shape, Rng& rng);

/// Forward pass. `task_index` is required iff the shape includes it.
Vec policy_act(const PolicyParams& params, const PolicyShape& shape, std::span<const double> obs,
               std::optional<std::size_t> task_index = std::nullopt);

// ---------------------------------------------------------------------------

/// theta_{i+1} = sum_k kappa_k (.) theta_i^k, elementwise. The constant-update
/// template instead uses theta_{i+1} = theta_i + kappa_0.
struct KappaPolynomial {
  enum class Template { Polynomial, ConstantUpdate };
  Template templ = Template::Polynomial;
  /// coeffs[k] multiplies theta^k.
  std::vector<Vec> coeffs;

  std::size_t degree() const { return coeffs.empty() ? 0 : coeffs.size() - 1; }
  std::size_t length() const { return coeffs.empty() ? 0 : coeffs.front().size(); }
  void validate() const;

  /// kappa_1 = 1 and all other coefficients 0.
  static KappaPolynomial identity(std::size_t n, std::size_t degree = 1);
  /// Constant-update template with kappa_0 = 0.
  static KappaPolynomial constant_zero(std::size_t n);

  /// Coefficients concatenated, lowest degree first.
  Vec flatten() const;
  static KappaPolynomial unflatten(Template templ, std::size_t degree, std::size_t n,
                                   std::span<const double> flat);
};

/// Applies the map i times. Throws NumericOverflow naming the first instance
/// whose parameters are not finite.
PolicyParams unroll_kappa(const KappaPolynomial& kappa, const PolicyParams& base, std::size_t i);
/// One application of the map.
Vec kappa_step(const KappaPolynomial& kappa, std::span<const double> theta);

// ---------------------------------------------------------------------------

struct EdgePolicy {
  PolicyParams base;
  KappaPolynomial kappa;
  /// Instance the base was trained on. Instance i uses kappa applied
  /// i - offset times (zero times for i < offset).
  std::size_t offset = 0;

  PolicyParams instance_params(std::size_t i) const;
};

struct PolicyGenerator {
  AbstractGraph graph;
  PolicyShape shape;
  /// Indexed by edge id.
  std::vector<EdgePolicy> edges;
  /// Guards at branching vertices; leaf labels are edge ids.
  std::map<std::size_t, DecisionTree> guards;
  GuardFeatures guard_features = GuardFeatures::TaskIndex;

  void validate() const;
};

/// Guard features of instance i.
Vec instance_features(const InductiveTask& task, std::size_t i, GuardFeatures mode);

struct PathPolicy {
  std::size_t instance = 0;
  /// u_0, ..., u_l.
  std::vector<std::size_t> vertices;
  std::vector<std::size_t> edges;
  std::vector<PolicyParams> params;
};

/// Follows guards from the initial vertex to a final vertex and unrolls each
/// edge's kappa to instance i.
PathPolicy generate_policy(const PolicyGenerator& gen, const InductiveTask& task, std::size_t i);

struct PathRollout {
  Trajectory traj;
  /// Edge position in the path that produced each action.
  std::vector<std::size_t> step_edge;
  bool reached_final = false;
};

/// Runs edge policy j until the state enters the region of vertex j+1, then
/// switches. The first edge may see its target at s_0; later edges only from
/// the next step on. Stops at the final region or after max_steps actions.
PathRollout execute_path_policy(const PathPolicy& pp, const PolicyShape& shape, const RLTask& task,
                                const AbstractGraph& graph, std::size_t max_steps,
                                std::span<const double> s0);
PathRollout execute_path_policy(const PathPolicy& pp, const PolicyShape& shape, const RLTask& task,
                                const AbstractGraph& graph, std::size_t max_steps, Rng& rng);

// ---------------------------------------------------------------------------

void save_generator(std::ostream& os, const PolicyGenerator& gen);
PolicyGenerator load_generator(std::istream& is);
void save_generator(const std::string& path, const PolicyGenerator& gen);
PolicyGenerator load_generator(const std::string& path);

}  // namespace genrl
