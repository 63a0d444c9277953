#include "genrl/bench.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace genrl {

using nlohmann::json;

namespace {

template <class T>
void take(const json& j, const char* key, T& out, std::set<std::string>& used) {
  used.insert(key);
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("config key '") + key + "': " + e.what());
  }
}

template <class T>
void take_opt(const json& j, const char* key, std::optional<T>& out, std::set<std::string>& used) {
  used.insert(key);
  if (!j.contains(key)) return;
  T v{};
  take(j, key, v, used);
  out = v;
}

void reject_unknown(const json& j, const std::set<std::string>& used, const std::string& where) {
  for (const auto& [k, v] : j.items())
    if (!used.count(k)) throw InvalidInput("unknown config key '" + where + k + "'");
}

ArsConfig ars_from_json(const json& j) {
  ArsConfig a;
  std::set<std::string> used;
  take(j, "n_directions", a.n_directions, used);
  take(j, "top_b", a.top_b, used);
  take(j, "delta_scale", a.delta_scale, used);
  take(j, "kappa_delta_scale", a.kappa_delta_scale, used);
  take(j, "kappa_init_scale", a.kappa_init_scale, used);
  take(j, "alpha_init", a.alpha_init, used);
  take(j, "alpha_min", a.alpha_min, used);
  take(j, "decay_patience", a.decay_patience, used);
  take(j, "converge_tol", a.converge_tol, used);
  take(j, "converge_window", a.converge_window, used);
  take(j, "max_iters", a.max_iters, used);
  take(j, "kappa_max_iters", a.kappa_max_iters, used);
  take(j, "eval_rollouts_train", a.eval_rollouts_train, used);
  take(j, "rollouts_per_direction", a.rollouts_per_direction, used);
  take(j, "score_rollouts", a.score_rollouts, used);
  take(j, "softmin_tau", a.softmin_tau, used);
  take(j, "safety_penalty", a.safety_penalty, used);
  take(j, "feasibility_threshold", a.feasibility_threshold, used);
  reject_unknown(j, used, "ars.");
  return a;
}

}  // namespace

void ExperimentConfig::validate() const {
  make_benchmark(benchmark, bench_options);
  if (!train.empty() && train_size) throw InvalidInput("give either train or train_size, not both");
  if (!train.empty() && std::find(train.begin(), train.end(), 0) == train.end())
    throw InvalidInput("Train must contain instance 0");
  if (train_size && *train_size < 1) throw InvalidInput("train_size must be at least 1");
  if (!(delta > 0.0 && delta <= 1.0)) throw InvalidInput("delta must lie in (0, 1]");
  if (test_rollouts < 1) throw InvalidInput("test_rollouts must be at least 1");
  if (seeds.empty()) throw InvalidInput("at least one seed is required");
  if (unseen_patience < 1) throw InvalidInput("unseen_patience must be at least 1");
  if (genrl.templ == KappaPolynomial::Template::Polynomial && genrl.degree < 1)
    throw InvalidInput("kappa degree must be at least 1");
  genrl.ars.validate();
}

ExperimentConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw InvalidInput("config must be a JSON object");
  ExperimentConfig c;
  std::set<std::string> used;
  take(j, "benchmark", c.benchmark, used);
  take(j, "train", c.train, used);
  take_opt(j, "train_size", c.train_size, used);
  std::string mode = std::string(train_mode_name(c.mode));
  take(j, "mode", mode, used);
  c.mode = parse_train_mode(mode);
  take(j, "degree", c.genrl.degree, used);
  std::string templ = "polynomial";
  take(j, "template", templ, used);
  if (templ == "polynomial")
    c.genrl.templ = KappaPolynomial::Template::Polynomial;
  else if (templ == "constant")
    c.genrl.templ = KappaPolynomial::Template::ConstantUpdate;
  else
    throw InvalidInput("template must be 'polynomial' or 'constant'");
  std::string features = "index";
  take(j, "guard_features", features, used);
  if (features == "index")
    c.genrl.guard_features = GuardFeatures::TaskIndex;
  else if (features == "init_mean")
    c.genrl.guard_features = GuardFeatures::InitMean;
  else
    throw InvalidInput("guard_features must be 'index' or 'init_mean'");
  take(j, "n_particles", c.genrl.n_particles, used);
  take(j, "hidden1", c.genrl.hidden1, used);
  take(j, "hidden2", c.genrl.hidden2, used);
  take(j, "guard_max_depth", c.genrl.guard_max_depth, used);
  take_opt(j, "train_steps", c.train_steps, used);
  take_opt(j, "test_steps", c.test_steps, used);
  take(j, "delta", c.delta, used);
  take(j, "test_rollouts", c.test_rollouts, used);
  take(j, "seeds", c.seeds, used);
  take(j, "unseen", c.unseen, used);
  take(j, "unseen_patience", c.unseen_patience, used);
  take(j, "unseen_max_probes", c.unseen_max_probes, used);
  take(j, "trajectory_rollouts", c.trajectory_rollouts, used);
  take_opt(j, "horizon", c.bench_options.horizon, used);
  take_opt(j, "reach_radius", c.bench_options.reach_radius, used);
  take(j, "output_dir", c.output_dir, used);
  used.insert("ars");
  if (j.contains("ars")) {
    if (!j["ars"].is_object()) throw InvalidInput("'ars' must be an object");
    c.genrl.ars = ars_from_json(j["ars"]);
  }
  reject_unknown(j, used, "");
  if (c.benchmark.empty()) throw InvalidInput("config needs a benchmark");
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str());
}

// ---------------------------------------------------------------------------

SuccessEstimate estimate_success(const std::function<bool(std::size_t)>& trial, std::size_t n,
                                 double delta) {
  if (n < 1) throw InvalidInput("estimate_success needs at least one rollout");
  std::vector<char> ok(n, 0);
  parallel_for(n, [&](std::size_t k) { ok[k] = trial(k) ? 1 : 0; });
  std::size_t hits = static_cast<std::size_t>(std::count(ok.begin(), ok.end(), 1));
  SuccessEstimate s;
  s.probability = static_cast<double>(hits) / static_cast<double>(n);
  s.pass = s.probability > delta;
  return s;
}

namespace {

struct PreparedInstance {
  RLTask task;
  AbstractGraph graph;
  PathPolicy policy;
};

std::optional<PreparedInstance> prepare(const PolicyGenerator& gen, const InductiveTask& task,
                                        std::size_t i) {
  try {
    PreparedInstance p{instantiate_task(task, i), instantiate_graph(gen.graph, task.update_pred, i).graph,
                       generate_policy(gen, task, i)};
    return p;
  } catch (const NumericOverflow&) {
    return std::nullopt;
  }
}

PathRollout rollout(const PreparedInstance& p, const PolicyShape& shape, std::size_t test_steps,
                    std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::size_t budget = test_steps * std::max<std::size_t>(1, p.policy.edges.size());
  return execute_path_policy(p.policy, shape, p.task, p.graph, budget, rng);
}

}  // namespace

SuccessEstimate estimate_success(const PolicyGenerator& gen, const InductiveTask& task,
                                 std::size_t i, std::size_t n, double delta, std::size_t test_steps,
                                 std::uint64_t seed) {
  auto prepared = prepare(gen, task, i);
  if (!prepared) return estimate_success([](std::size_t) { return false; }, n, delta);
  return estimate_success(
      [&](std::size_t k) {
        auto r = rollout(*prepared, gen.shape, test_steps, derive_seed(seed, {i, k}));
        return task_satisfied(prepared->task, r.traj);
      },
      n, delta);
}

std::optional<PathRollout> sample_rollout(const PolicyGenerator& gen, const InductiveTask& task,
                                          std::size_t i, std::size_t test_steps,
                                          std::uint64_t seed) {
  auto prepared = prepare(gen, task, i);
  if (!prepared) return std::nullopt;
  return rollout(*prepared, gen.shape, test_steps, seed);
}

UnseenResult evaluate_unseen(const PolicyGenerator& gen, const InductiveTask& task,
                             std::size_t first, std::size_t n, double delta, std::size_t test_steps,
                             std::size_t patience, std::size_t max_probes, std::uint64_t seed) {
  UnseenResult out;
  std::size_t misses = 0;
  for (std::size_t i = first;; ++i) {
    if ((task.horizon && i >= *task.horizon) || out.probed >= max_probes) {
      out.capped = true;
      break;
    }
    auto est = estimate_success(gen, task, i, n, delta, test_steps, seed);
    ++out.probed;
    out.instances.push_back({i, false, est.probability, est.pass});
    if (est.pass) {
      ++out.passes;
      misses = 0;
    } else if (++misses >= patience) {
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string report_json(const RunReport& r) {
  json j;
  j["benchmark"] = r.benchmark;
  j["mode"] = r.mode;
  j["seed"] = r.seed;
  j["train"] = r.train;
  json inst = json::array();
  for (const auto& x : r.instances)
    inst.push_back({{"index", x.index},
                    {"split", x.train ? "train" : "unseen"},
                    {"probability", x.probability},
                    {"pass", x.pass}});
  j["instances"] = inst;
  j["train_success"] = r.train_success;
  j["unseen_success"] = r.unseen_success;
  j["unseen_probed"] = r.unseen_probed;
  j["unseen_capped"] = r.unseen_capped;
  json guards = json::object();
  for (const auto& [u, g] : r.guards) guards[std::to_string(u)] = g;
  j["guards"] = guards;
  j["warnings"] = r.warnings;
  return j.dump(2) + "\n";
}

namespace {

json manifest_json(const ExperimentConfig& cfg, std::uint64_t seed, const GenrlResult& res,
                   const std::map<std::string, double>& timing) {
  const auto& g = res.generator.graph;
  json j;
  j["benchmark"] = cfg.benchmark;
  j["mode"] = std::string(train_mode_name(cfg.mode));
  j["seed"] = seed;
  j["vertices"] = g.vertex_count();
  json edges = json::array();
  for (const auto& e : res.edges) {
    json probs = json::object();
    for (auto i : e.available) probs[std::to_string(i)] = res.probs.count({e.edge, i}) ? res.probs.at({e.edge, i}) : 0.0;
    json je{{"edge", e.edge},
            {"from", e.from},
            {"to", e.to},
            {"target", region_label(g.regions[e.to])},
            {"available", e.available},
            {"train_e", e.train_e},
            {"base_score", e.base_score},
            {"base_success", e.base_success},
            {"kappa_score", e.kappa_score},
            {"success", probs},
            {"decision_set", res.sets.count(e.edge) ? res.sets.at(e.edge) : std::vector<std::size_t>{}}};
    if (e.base_instance) je["base_instance"] = *e.base_instance;
    edges.push_back(je);
  }
  j["edges"] = edges;
  json reach = json::object();
  for (const auto& [key, p] : res.tables.prob) {
    auto [u, i] = key;
    reach[std::to_string(u)][std::to_string(i)] = {{"P", p}, {"best_in", res.tables.best(u, i)}};
  }
  j["reach"] = reach;
  json guards = json::object();
  for (const auto& [u, expr] : res.guard_expressions) guards[std::to_string(u)] = expr;
  j["guards"] = guards;
  j["warnings"] = res.warnings;
  j["timing_seconds"] = timing;
  return j;
}

void write_telemetry(std::ostream& os, const GenrlResult& res) {
  os << "edge,phase,iter,best_score,mean_score,alpha\n";
  for (const auto& e : res.edges) {
    auto dump = [&](const char* phase, const std::vector<ArsIterRecord>& trace) {
      for (const auto& r : trace)
        os << e.edge << ',' << phase << ',' << r.iter << ',' << format_double(r.best_score) << ','
           << format_double(r.mean_score) << ',' << format_double(r.alpha) << '\n';
    };
    dump("base", e.base_trace);
    dump("kappa", e.kappa_trace);
  }
}

void write_trajectories(std::ostream& os, const PolicyGenerator& gen, const InductiveTask& task,
                        const std::vector<InstanceResult>& instances, std::size_t rollouts,
                        std::size_t test_steps, std::uint64_t seed) {
  const std::size_t n = task.base.env.state_dim;
  const std::size_t m = task.base.env.action_dim;
  os << "instance,split,rollout,satisfied,step";
  for (std::size_t k = 0; k < n; ++k) os << ",s_" << k;
  for (std::size_t k = 0; k < m; ++k) os << ",a_" << k;
  os << '\n';
  for (const auto& inst : instances) {
    for (std::size_t k = 0; k < rollouts; ++k) {
      auto r = sample_rollout(gen, task, inst.index, test_steps, derive_seed(seed, {0x7a, inst.index, k}));
      if (!r) continue;
      bool sat = task_satisfied(instantiate_task(task, inst.index), r->traj);
      std::ostringstream body;
      write_trajectory_csv(body, r->traj, false);
      std::istringstream lines(body.str());
      for (std::string line; std::getline(lines, line);)
        os << inst.index << ',' << (inst.train ? "train" : "unseen") << ',' << k << ','
           << (sat ? 1 : 0) << ',' << line << '\n';
    }
  }
}

std::vector<std::size_t> resolve_train(const ExperimentConfig& cfg, const Benchmark& b) {
  if (!cfg.train.empty()) return cfg.train;
  if (cfg.train_size) {
    std::vector<std::size_t> t(*cfg.train_size);
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = k;
    return t;
  }
  return b.train;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw InvalidInput("cannot write " + p.string());
  os << text;
  if (!os) throw InvalidInput("failed writing " + p.string());
}

}  // namespace

RunOutput run_experiment(const ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  namespace fs = std::filesystem;
  Benchmark b = make_benchmark(cfg.benchmark, cfg.bench_options);
  auto train = resolve_train(cfg, b);
  std::sort(train.begin(), train.end());
  GenrlConfig gcfg = cfg.genrl;
  gcfg.ars.train_steps = cfg.train_steps.value_or(b.train_steps);
  gcfg.ars.test_steps = cfg.test_steps.value_or(b.test_steps);
  gcfg.ars.seed = seed;

  auto t0 = std::chrono::steady_clock::now();
  RunOutput out;
  out.result = train_generator(b.task, train, gcfg, cfg.mode);
  const auto& gen = out.result.generator;
  auto t1 = std::chrono::steady_clock::now();

  RunReport& rep = out.report;
  rep.benchmark = cfg.benchmark;
  rep.mode = std::string(train_mode_name(cfg.mode));
  rep.seed = seed;
  rep.train = train;
  std::uint64_t eval_seed = derive_seed(seed, {0xe7a1, 0x7e57});
  for (auto i : train) {
    auto est = estimate_success(gen, b.task, i, cfg.test_rollouts, cfg.delta, gcfg.ars.test_steps,
                                eval_seed);
    rep.instances.push_back({i, true, est.probability, est.pass});
    if (est.pass) ++rep.train_success;
  }
  if (cfg.unseen) {
    auto un = evaluate_unseen(gen, b.task, train.back() + 1, cfg.test_rollouts, cfg.delta,
                              gcfg.ars.test_steps, cfg.unseen_patience, cfg.unseen_max_probes,
                              eval_seed);
    rep.unseen_success = un.passes;
    rep.unseen_probed = un.probed;
    rep.unseen_capped = un.capped;
    rep.instances.insert(rep.instances.end(), un.instances.begin(), un.instances.end());
  }
  rep.guards = out.result.guard_expressions;
  rep.warnings = out.result.warnings;
  auto t2 = std::chrono::steady_clock::now();

  auto timing = out.result.timing;
  timing["evaluate"] = std::chrono::duration<double>(t2 - t1).count();
  timing["total"] = std::chrono::duration<double>(t2 - t0).count();

  fs::path dir = fs::path(cfg.output_dir) /
                 (cfg.benchmark + "_" + rep.mode + "_seed" + std::to_string(seed));
  fs::create_directories(dir);
  out.dir = dir.string();
  write_file(dir / "report.json", report_json(rep));
  save_generator((dir / "generator.bin").string(), gen);
  write_file(dir / "manifest.json", manifest_json(cfg, seed, out.result, timing).dump(2) + "\n");
  {
    std::ostringstream os;
    write_telemetry(os, out.result);
    write_file(dir / "telemetry.csv", os.str());
  }
  {
    std::ostringstream os;
    write_trajectories(os, gen, b.task, rep.instances, cfg.trajectory_rollouts, gcfg.ars.test_steps,
                       seed);
    write_file(dir / "trajectories.csv", os.str());
  }
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) throw InvalidInput("median of an empty set");
  std::sort(v.begin(), v.end());
  std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::vector<RunReport> run_batch(const ExperimentConfig& cfg) {
  std::vector<RunReport> reports;
  for (auto seed : cfg.seeds) reports.push_back(run_experiment(cfg, seed).report);

  std::vector<double> tr, un;
  std::ostringstream csv, txt;
  csv << "benchmark,mode,seed,train_size,train_success,unseen_success,unseen_probed\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-28s %-6s %-8s %-14s %-14s %s\n", "benchmark", "mode", "seed",
                "train_success", "unseen_success", "unseen_probed");
  txt << line;
  for (const auto& r : reports) {
    csv << r.benchmark << ',' << r.mode << ',' << r.seed << ',' << r.train.size() << ','
        << r.train_success << ',' << r.unseen_success << ',' << r.unseen_probed << '\n';
    std::snprintf(line, sizeof line, "%-28s %-6s %-8llu %-14s %-14zu %zu\n", r.benchmark.c_str(),
                  r.mode.c_str(), static_cast<unsigned long long>(r.seed),
                  (std::to_string(r.train_success) + "/" + std::to_string(r.train.size())).c_str(),
                  r.unseen_success, r.unseen_probed);
    txt << line;
    tr.push_back(static_cast<double>(r.train_success));
    un.push_back(static_cast<double>(r.unseen_success));
  }
  csv << cfg.benchmark << ',' << train_mode_name(cfg.mode) << ",median,," << format_double(median(tr))
      << ',' << format_double(median(un)) << ",\n";
  std::snprintf(line, sizeof line, "%-28s %-6s %-8s %-14s %-14s\n", cfg.benchmark.c_str(),
                std::string(train_mode_name(cfg.mode)).c_str(), "median",
                format_double(median(tr)).c_str(), format_double(median(un)).c_str());
  txt << line;

  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  std::string stem = cfg.benchmark + "_" + std::string(train_mode_name(cfg.mode));
  write_file(fs::path(cfg.output_dir) / (stem + "_results.csv"), csv.str());
  write_file(fs::path(cfg.output_dir) / (stem + "_results.txt"), txt.str());
  return reports;
}

}  // namespace genrl
