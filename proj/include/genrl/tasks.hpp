#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "genrl/envs.hpp"
#include "genrl/spec_lang.hpp"

namespace genrl {

struct RLTask {
  Spec spec;
  InitDistribution init;
  Environment env;
};

/// A family of tasks R_0, R_1, ... obtained by translating predicates, the
/// initial distribution and (optionally) environment parameters once per step.
struct InductiveTask {
  RLTask base;
  PredicateUpdate update_pred;
  Vec update_init;
  /// Additive environment-parameter increment; empty for none.
  Vec update_env;
  /// Number of instances when the family is finite (e.g. tower height).
  std::optional<std::size_t> horizon;

  void validate() const;
};

RLTask instantiate_task(const InductiveTask& task, std::size_t i);

/// eval_spec on the task's specification. The initial state is not re-checked.
bool task_satisfied(const RLTask& task, const Trajectory& traj);

// ---------------------------------------------------------------------------
// Benchmark catalog

struct BenchmarkOptions {
  /// Overrides the tower height of destacking benchmarks.
  std::optional<std::size_t> horizon;
  /// Overrides the reach radius of Car2D goals.
  std::optional<double> reach_radius;
};

struct Benchmark {
  std::string id;
  std::string description;
  std::string spec_text;
  InductiveTask task;
  std::vector<std::size_t> train;
  /// Per-edge rollout budgets for training and testing.
  std::size_t train_steps = 15;
  std::size_t test_steps = 60;
};

const std::vector<std::string>& benchmark_ids();
/// Throws InvalidInput for an unknown id.
Benchmark make_benchmark(std::string_view id, const BenchmarkOptions& options = {});

}  // namespace genrl
