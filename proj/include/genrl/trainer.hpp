#pragma once

#include <functional>
#include <vector>

#include "genrl/abstract_graph.hpp"
#include "genrl/policy.hpp"

namespace genrl {

struct ArsConfig {
  std::size_t n_directions = 30;
  std::size_t top_b = 8;
  /// Perturbation std for policy parameters.
  double delta_scale = 0.05;
  /// Perturbation std for kappa coefficients.
  double kappa_delta_scale = 0.002;
  /// Std of the random part of the initial kappa coefficients.
  double kappa_init_scale = 0.001;
  double alpha_init = 1.0;
  double alpha_min = 0.1;
  /// Halve alpha after this many iterations without a new best score.
  std::size_t decay_patience = 20;
  /// Stop once the best score gained less than converge_tol over converge_window iterations.
  double converge_tol = 1e-4;
  std::size_t converge_window = 50;
  std::size_t max_iters = 200;
  std::size_t kappa_max_iters = 200;
  /// Episode length while training an edge.
  std::size_t train_steps = 15;
  /// Episode length per edge for success estimates and induced distributions.
  std::size_t test_steps = 60;
  /// Rollouts per success estimate during training.
  std::size_t eval_rollouts_train = 100;
  /// Rollouts averaged per perturbed candidate (and per instance for kappa).
  std::size_t rollouts_per_direction = 4;
  /// Rollouts on fixed seeds used to track the best-so-far candidate.
  std::size_t score_rollouts = 16;
  double softmin_tau = 1.0;
  double safety_penalty = 10.0;
  /// Edge success at or below this excludes an instance from an edge.
  double feasibility_threshold = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct RewardSpec {
  AtomicPredicate target;
  std::vector<AtomicPredicate> safety;
  double safety_penalty = 10.0;
};

/// Distance from a state to the goal of a predicate: Euclidean distance to
/// the ball center or rectangle center, angular error, or missing tip height.
double goal_distance(const AtomicPredicate& target, std::span<const double> state);

/// -goal_distance(final state) - penalty * (states violating any safety predicate).
double edge_reward(const Trajectory& traj, const RewardSpec& spec);

/// sum_k w_k r_k with w_k proportional to exp(-r_k / tau).
double softmin_score(std::span<const double> rewards, double tau);

Vec perturb(std::span<const double> v, std::span<const double> delta, double scale);

struct DirectionSample {
  /// The perturbation actually applied (already scaled).
  Vec delta;
  double r_plus = 0.0;
  double r_minus = 0.0;
};

/// ARS step: keep the top_b samples by max(r+, r-) and return
/// alpha / (top_b * sigma_R) * sum (r+ - r-) delta, where sigma_R is the
/// standard deviation of the 2 * top_b kept scores (floored at 1e-8).
Vec delta_update(const std::vector<DirectionSample>& samples, std::size_t top_b, double alpha);

struct ArsIterRecord {
  std::size_t iter = 0;
  double best_score = 0.0;
  double mean_score = 0.0;
  double alpha = 0.0;
};

struct ArsResult {
  Vec best;
  double best_score = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<ArsIterRecord> trace;
};

/// Generic ARS loop. `train_score(x, iter, seed)` scores a candidate with the
/// given random stream (the + and - candidates of a direction share it);
/// `eval_score(x)` is the deterministic score used to keep the best candidate.
ArsResult ars_optimize(Vec x0,
                       const std::function<double(const Vec&, std::size_t, std::uint64_t)>& train_score,
                       const std::function<double(const Vec&)>& eval_score, const ArsConfig& cfg,
                       double delta_scale, std::size_t max_iters, std::uint64_t seed);

// ---------------------------------------------------------------------------

/// One edge of one task instance, as seen by the trainer.
struct EdgeProblem {
  Environment env;
  PolicyShape shape;
  InitDistribution init;
  Region target;
  RewardSpec reward;
  /// Whether the start state itself may count as entering the target (true
  /// for edges leaving the initial vertex).
  bool check_start = false;
  std::size_t instance = 0;
};

EdgeProblem make_edge_problem(const AbstractGraph& instance_graph, std::size_t edge,
                              const RLTask& task, const PolicyShape& shape, InitDistribution init,
                              std::size_t instance, double safety_penalty);

struct EdgeRollout {
  Trajectory traj;
  bool entered = false;
  /// Entered the target with every state on the way satisfying the safety predicates.
  bool success = false;
};

/// Runs the edge policy from s0 for at most max_steps, stopping on target entry.
EdgeRollout rollout_edge(const EdgeProblem& problem, const PolicyParams& params,
                         std::span<const double> s0, std::size_t max_steps);

/// Mean edge reward over n rollouts whose initial states come from `seed`.
double mean_edge_reward(const EdgeProblem& problem, const PolicyParams& params, std::size_t n,
                        std::size_t max_steps, std::uint64_t seed);

/// Fraction of n rollouts that succeed.
double edge_success(const EdgeProblem& problem, const PolicyParams& params, std::size_t n,
                    std::size_t max_steps, std::uint64_t seed);

struct BaseResult {
  PolicyParams params;
  double score = 0.0;
  double success = 0.0;
  /// Success estimate did not exceed the feasibility threshold.
  bool infeasible = false;
  ArsResult ars;
};

/// Plain ARS on one edge problem, starting from `init` (or a fresh network).
BaseResult learn_base_policy(const EdgeProblem& problem, const ArsConfig& cfg, std::uint64_t seed,
                             std::size_t max_iters, const PolicyParams* init = nullptr);

struct KappaResult {
  KappaPolynomial kappa;
  double score = 0.0;
  ArsResult ars;
};

/// Initial kappa: kappa_1 = 1 + c N(0, 1) and every other coefficient
/// c N(0, 1), with c = scale. The constant-update template gets kappa_0 = c N(0, 1).
KappaPolynomial initial_kappa(KappaPolynomial::Template templ, std::size_t degree, std::size_t n,
                              Rng& rng, double scale = 0.01);

/// Modified ARS over kappa: every direction is scored by the softmin, over the
/// given instances, of the reward of unroll_kappa(kappa +- delta, base, i - offset).
/// Every instance must be at least `offset`.
KappaResult learn_kappa(const std::vector<EdgeProblem>& problems, const PolicyParams& base,
                        const KappaPolynomial& init, const ArsConfig& cfg, std::uint64_t seed,
                        std::size_t offset = 0);

enum class SharedMode { RoundRobin, Softmin };

/// One parameter vector for all instances. RoundRobin updates on one instance
/// per iteration; Softmin scores directions by the softmin over instances.
BaseResult learn_shared_policy(const std::vector<EdgeProblem>& problems, SharedMode mode,
                               const ArsConfig& cfg, std::uint64_t seed, std::size_t max_iters);

}  // namespace genrl
