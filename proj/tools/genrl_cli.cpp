#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "genrl/bench.hpp"

namespace {

constexpr int kConfigError = 1;
constexpr int kTrainingError = 2;

void print_report(const genrl::RunReport& r) {
  std::printf("%s %s seed=%llu train=%zu/%zu unseen=%zu (probed %zu%s)\n", r.benchmark.c_str(),
              r.mode.c_str(), static_cast<unsigned long long>(r.seed), r.train_success,
              r.train.size(), r.unseen_success, r.unseen_probed, r.unseen_capped ? ", capped" : "");
  for (const auto& [u, g] : r.guards) std::printf("  guard at vertex %zu: %s\n", u, g.c_str());
  for (const auto& w : r.warnings) std::printf("  warning: %s\n", w.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy generators for inductive task families"};
  app.require_subcommand(1);

  std::string config_path, mode, out_dir;
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "train and evaluate a benchmark from a JSON config");
  run->add_option("--config", config_path, "config file")->required();
  run->add_option("--mode", mode, "genrl, base1, base2 or base3");
  run->add_option("--seed", seed, "single seed overriding the config");
  run->add_option("--out", out_dir, "output directory overriding the config");

  std::string gen_path, bench_id;
  std::size_t rollouts = 1000;
  double delta = 0.9;
  std::optional<std::size_t> horizon, test_steps;
  bool unseen = false;
  auto* eval = app.add_subcommand("eval", "evaluate a saved generator on a benchmark");
  eval->add_option("--generator", gen_path, "generator.bin")->required();
  eval->add_option("--benchmark", bench_id, "benchmark id")->required();
  eval->add_option("--rollouts", rollouts, "rollouts per instance");
  eval->add_option("--delta", delta, "success threshold");
  eval->add_option("--horizon", horizon, "tower height for destacking benchmarks");
  eval->add_option("--test-steps", test_steps, "per-edge step budget");
  eval->add_flag("--unseen", unseen, "also run the unseen sweep");

  app.add_subcommand("list-benchmarks", "print benchmark ids");

  CLI11_PARSE(app, argc, argv);

  if (app.got_subcommand("list-benchmarks")) {
    for (const auto& id : genrl::benchmark_ids()) {
      auto b = genrl::make_benchmark(id);
      std::printf("%-32s %s\n", id.c_str(), b.description.c_str());
    }
    return 0;
  }

  if (app.got_subcommand("run")) {
    genrl::ExperimentConfig cfg;
    try {
      cfg = genrl::load_config(config_path);
      if (!mode.empty()) cfg.mode = genrl::parse_train_mode(mode);
      if (seed) cfg.seeds = {*seed};
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      cfg.validate();
    } catch (const std::exception& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kConfigError;
    }
    try {
      for (const auto& r : genrl::run_batch(cfg)) print_report(r);
    } catch (const std::exception& e) {
      std::cerr << "training error: " << e.what() << '\n';
      return kTrainingError;
    }
    return 0;
  }

  std::optional<genrl::Benchmark> bench;
  genrl::PolicyGenerator gen;
  try {
    genrl::BenchmarkOptions opts;
    opts.horizon = horizon;
    bench.emplace(genrl::make_benchmark(bench_id, opts));
    gen = genrl::load_generator(gen_path);
    if (rollouts < 1 || !(delta > 0.0 && delta <= 1.0)) throw genrl::InvalidInput("bad rollouts or delta");
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  try {
    std::size_t steps = test_steps.value_or(bench->test_steps);
    std::size_t passes = 0;
    for (auto i : bench->train) {
      auto est = genrl::estimate_success(gen, bench->task, i, rollouts, delta, steps, 0);
      passes += est.pass;
      std::printf("instance %zu train  p=%.3f %s\n", i, est.probability, est.pass ? "pass" : "fail");
    }
    std::printf("train: %zu/%zu\n", passes, bench->train.size());
    if (unseen) {
      auto un = genrl::evaluate_unseen(gen, bench->task, bench->train.back() + 1, rollouts, delta, steps,
                                       5, 50, 0);
      for (const auto& x : un.instances)
        std::printf("instance %zu unseen p=%.3f %s\n", x.index, x.probability, x.pass ? "pass" : "fail");
      std::printf("unseen: %zu (probed %zu)\n", un.passes, un.probed);
    }
  } catch (const std::exception& e) {
    std::cerr << "evaluation error: " << e.what() << '\n';
    return kTrainingError;
  }
  return 0;
}
