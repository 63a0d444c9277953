#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "genrl/genrl.hpp"

namespace genrl {

struct ExperimentConfig {
  std::string benchmark;
  /// Explicit Train indices; empty means the benchmark default.
  std::vector<std::size_t> train;
  /// Use the first train_size indices (0..n-1) instead of an explicit list.
  std::optional<std::size_t> train_size;
  TrainMode mode = TrainMode::GenRL;
  GenrlConfig genrl;
  /// Per-edge rollout budgets; unset means the benchmark default.
  std::optional<std::size_t> train_steps, test_steps;
  double delta = 0.9;
  std::size_t test_rollouts = 1000;
  std::vector<std::uint64_t> seeds{0};
  bool unseen = true;
  /// Consecutive failures that end the unseen sweep.
  std::size_t unseen_patience = 5;
  /// Hard cap on unseen probes for families without a horizon.
  std::size_t unseen_max_probes = 50;
  /// Rollouts per instance written to trajectories.csv.
  std::size_t trajectory_rollouts = 5;
  BenchmarkOptions bench_options;
  std::string output_dir = "runs";

  void validate() const;
};

/// Reads a JSON config. Unknown keys are errors. Throws InvalidInput.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig config_from_json_text(const std::string& text);

struct SuccessEstimate {
  double probability = 0.0;
  bool pass = false;
};

/// Runs trial(k) for k < n and passes iff the success fraction exceeds delta.
SuccessEstimate estimate_success(const std::function<bool(std::size_t)>& trial, std::size_t n,
                                 double delta);

/// Rollouts of the generated path policy for instance i with a per-edge budget
/// of test_steps; a rollout succeeds when its trajectory satisfies the
/// instance specification. A kappa overflow counts as failure.
SuccessEstimate estimate_success(const PolicyGenerator& gen, const InductiveTask& task,
                                 std::size_t i, std::size_t n, double delta, std::size_t test_steps,
                                 std::uint64_t seed);

/// A single rollout of instance i, seeded; nullopt if the policy overflows.
std::optional<PathRollout> sample_rollout(const PolicyGenerator& gen, const InductiveTask& task,
                                          std::size_t i, std::size_t test_steps, std::uint64_t seed);

struct InstanceResult {
  std::size_t index = 0;
  bool train = false;
  double probability = 0.0;
  bool pass = false;
};

struct UnseenResult {
  std::size_t passes = 0;
  std::size_t probed = 0;
  /// Sweep stopped at the task horizon or the probe cap rather than on failures.
  bool capped = false;
  std::vector<InstanceResult> instances;
};

/// Probes i = first, first + 1, ... until `patience` consecutive failures,
/// the horizon, or max_probes.
UnseenResult evaluate_unseen(const PolicyGenerator& gen, const InductiveTask& task,
                             std::size_t first, std::size_t n, double delta, std::size_t test_steps,
                             std::size_t patience, std::size_t max_probes, std::uint64_t seed);

struct RunReport {
  std::string benchmark;
  std::string mode;
  std::uint64_t seed = 0;
  std::vector<std::size_t> train;
  std::vector<InstanceResult> instances;
  std::size_t train_success = 0;
  std::size_t unseen_success = 0;
  std::size_t unseen_probed = 0;
  bool unseen_capped = false;
  std::map<std::size_t, std::string> guards;
  std::vector<std::string> warnings;
};

/// Canonical JSON text; identical runs give identical bytes.
std::string report_json(const RunReport& report);

struct RunOutput {
  RunReport report;
  GenrlResult result;
  /// Directory holding this run's artifacts.
  std::string dir;
};

/// One seed: trains, evaluates Train and Unseen, writes report.json,
/// generator.bin, manifest.json, trajectories.csv and telemetry.csv under
/// output_dir/<benchmark>_<mode>_seed<seed>.
RunOutput run_experiment(const ExperimentConfig& cfg, std::uint64_t seed);

/// All configured seeds, plus results.csv and results.txt with a median row.
std::vector<RunReport> run_batch(const ExperimentConfig& cfg);

double median(std::vector<double> v);

}  // namespace genrl
