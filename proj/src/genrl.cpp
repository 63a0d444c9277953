#include "genrl/genrl.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <set>

namespace genrl {

double ReachTables::p(std::size_t u, std::size_t i) const {
  auto it = prob.find({u, i});
  return it == prob.end() ? 0.0 : it->second;
}

const std::vector<std::size_t>& ReachTables::best(std::size_t u, std::size_t i) const {
  static const std::vector<std::size_t> none;
  auto it = best_in.find({u, i});
  return it == best_in.end() ? none : it->second;
}

namespace {

double edge_prob(const EdgeProbs& probs, std::size_t e, std::size_t i) {
  auto it = probs.find({e, i});
  if (it == probs.end()) return 0.0;
  if (!(it->second >= 0.0 && it->second <= 1.0))
    throw InvalidInput("edge probability outside [0, 1]");
  return it->second;
}

}  // namespace

void compute_vertex_tables(ReachTables& tables, const AbstractGraph& g, std::size_t u,
                           const EdgeProbs& probs, const std::vector<std::size_t>& train) {
  auto ins = g.in_edges(u);
  for (auto i : train) {
    if (u == AbstractGraph::initial()) {
      tables.prob[{u, i}] = 1.0;
      tables.best_in[{u, i}] = {};
      continue;
    }
    double best = 0.0;
    std::vector<std::size_t> arg;
    for (auto e : ins) {
      std::size_t w = g.edges[e].from;
      double val = tables.p(w, i) * edge_prob(probs, e, i);
      if (arg.empty() || val > best) {
        best = val;
        arg = {w};
      } else if (val == best) {
        arg.push_back(w);
      }
    }
    tables.prob[{u, i}] = best;
    tables.best_in[{u, i}] = std::move(arg);
  }
}

ReachTables compute_reach_tables(const AbstractGraph& g, const EdgeProbs& probs,
                                 const std::vector<std::size_t>& train) {
  ReachTables t;
  for (auto u : g.topological_order()) compute_vertex_tables(t, g, u, probs, train);
  return t;
}

DecisionSets build_decision_sets(const AbstractGraph& g, const ReachTables& tables,
                                 const std::vector<std::size_t>& train) {
  DecisionSets sets;
  for (std::size_t e = 0; e < g.edges.size(); ++e) sets[e] = {};
  const std::size_t nv = g.vertex_count();

  std::set<std::pair<std::size_t, std::size_t>> on_best;
  for (auto i : train) {
    double top = 0.0;
    for (auto f : g.finals) top = std::max(top, tables.p(f, i));
    if (top <= 0.0) continue;
    for (auto f : g.finals)
      if (tables.p(f, i) == top) on_best.insert({f, i});
  }

  std::vector<std::size_t> pending(nv);
  std::deque<std::size_t> queue;
  for (std::size_t v = 0; v < nv; ++v) {
    pending[v] = g.out_edges(v).size();
    if (pending[v] == 0) queue.push_back(v);
  }
  while (!queue.empty()) {
    std::size_t u = queue.front();
    queue.pop_front();
    for (auto e : g.in_edges(u)) {
      std::size_t v = g.edges[e].from;
      for (auto i : train) {
        if (!on_best.count({u, i})) continue;
        const auto& b = tables.best(u, i);
        if (std::find(b.begin(), b.end(), v) == b.end()) continue;
        sets[e].push_back(i);
        on_best.insert({v, i});
      }
      if (--pending[v] == 0) queue.push_back(v);
    }
  }
  return sets;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> guard_dataset(
    const AbstractGraph& g, std::size_t u, const DecisionSets& sets) {
  std::vector<std::size_t> xs, ys;
  std::set<std::size_t> seen;
  for (auto e : g.out_edges(u)) {
    auto it = sets.find(e);
    if (it == sets.end()) continue;
    for (auto i : it->second)
      if (seen.insert(i).second) {
        xs.push_back(i);
        ys.push_back(e);
      }
  }
  return {xs, ys};
}

namespace {

std::optional<DecisionTree> guard_for(const AbstractGraph& g, std::size_t u, const DecisionSets& sets,
                                      const std::map<std::size_t, Vec>& features,
                                      std::size_t max_depth) {
  auto [xs, ys] = guard_dataset(g, u, sets);
  if (xs.empty()) return std::nullopt;
  std::vector<Vec> x;
  x.reserve(xs.size());
  for (auto i : xs) {
    auto it = features.find(i);
    if (it == features.end())
      throw InvalidInput("no guard features for instance " + std::to_string(i));
    x.push_back(it->second);
  }
  return train_decision_tree(x, ys, max_depth);
}

}  // namespace

std::map<std::size_t, DecisionTree> learn_guards(const AbstractGraph& g, const DecisionSets& sets,
                                                 const std::map<std::size_t, Vec>& features,
                                                 std::size_t max_depth) {
  std::map<std::size_t, DecisionTree> guards;
  for (auto u : g.branching_vertices()) {
    auto tree = guard_for(g, u, sets, features, max_depth);
    if (!tree) throw UnguardableVertex(u);
    guards[u] = std::move(*tree);
  }
  return guards;
}

std::string guard_expression(const DecisionTree& tree, GuardFeatures mode) {
  bool by_index = mode == GuardFeatures::TaskIndex;
  return tree_expression(
      tree, [&](std::size_t f) { return by_index ? std::string("i") : "x" + std::to_string(f); },
      [](std::size_t e) { return "e" + std::to_string(e); }, by_index);
}

// ---------------------------------------------------------------------------

InitDistribution induce_distribution(std::size_t u, std::size_t i,
                                     const std::vector<std::size_t>& best_in,
                                     const AbstractGraph& graph, const RLTask& task,
                                     const PolicyShape& shape,
                                     const std::map<std::size_t, PolicyParams>& edge_params,
                                     const std::map<std::size_t, InitDistribution>& vertex_dists,
                                     std::size_t n_particles, std::size_t max_steps,
                                     std::uint64_t seed) {
  if (u == AbstractGraph::initial()) return task.init;
  if (best_in.empty()) throw EmptyDistribution(u, i);
  if (n_particles < 1) throw InvalidInput("n_particles must be at least 1");

  std::vector<std::vector<Vec>> per_pred;
  for (auto w : best_in) {
    auto e = graph.find_edge(w, u);
    if (!e) throw ConsistencyError("bestIn names a vertex without an edge");
    auto params = edge_params.find(*e);
    auto dist = vertex_dists.find(w);
    if (params == edge_params.end() || dist == vertex_dists.end())
      throw ConsistencyError("predecessor of vertex " + std::to_string(u) + " was not trained");
    EdgeProblem problem = make_edge_problem(graph, *e, task, shape, dist->second, i, 0.0);
    std::vector<Vec> entries;
    std::uint64_t stream = derive_seed(seed, {w});
    for (std::size_t k = 0; k < n_particles; ++k) {
      Rng rng = make_rng(derive_seed(stream, {k}));
      Vec s0 = env_reset(problem.env, sample_init(problem.init, rng));
      auto r = rollout_edge(problem, params->second, s0, max_steps);
      if (r.success) entries.push_back(r.traj.states.back());
    }
    per_pred.push_back(std::move(entries));
  }

  std::vector<Vec> pool;
  for (std::size_t k = 0; pool.size() < n_particles; ++k) {
    bool any = false;
    for (const auto& entries : per_pred) {
      if (k >= entries.size() || pool.size() >= n_particles) continue;
      pool.push_back(entries[k]);
      any = true;
    }
    if (!any) break;
  }
  if (pool.empty()) throw EmptyDistribution(u, i);
  return InitDistribution::empirical(std::move(pool));
}

std::string_view train_mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::GenRL: return "genrl";
    case TrainMode::Base1: return "base1";
    case TrainMode::Base2: return "base2";
    case TrainMode::Base3: return "base3";
  }
  return "?";
}

TrainMode parse_train_mode(std::string_view name) {
  for (auto m : {TrainMode::GenRL, TrainMode::Base1, TrainMode::Base2, TrainMode::Base3})
    if (train_mode_name(m) == name) return m;
  throw InvalidInput("unknown mode '" + std::string(name) + "'");
}

namespace {

KappaPolynomial neutral_kappa(const GenrlConfig& cfg, TrainMode mode, std::size_t n) {
  if (mode != TrainMode::GenRL || cfg.templ == KappaPolynomial::Template::ConstantUpdate)
    return KappaPolynomial::constant_zero(n);
  return KappaPolynomial::identity(n, cfg.degree);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

GenrlResult train_generator(const InductiveTask& task, const std::vector<std::size_t>& train_in,
                            const GenrlConfig& cfg, TrainMode mode) {
  task.validate();
  cfg.ars.validate();
  std::vector<std::size_t> train = train_in;
  std::sort(train.begin(), train.end());
  if (std::adjacent_find(train.begin(), train.end()) != train.end())
    throw InvalidInput("Train has duplicate indices");
  if (train.empty() || train.front() != 0) throw InvalidInput("Train must contain instance 0");
  if (task.horizon && train.back() >= *task.horizon)
    throw InvalidInput("Train index beyond the task horizon");
  if (cfg.n_particles < 1) throw InvalidInput("n_particles must be at least 1");

  const auto t_start = std::chrono::steady_clock::now();
  const ArsConfig& ars = cfg.ars;
  GenrlResult res;
  AbstractGraph g = compile_spec(task.base.spec);
  g.validate();
  PolicyShape shape =
      PolicyShape::for_env(task.base.env, mode == TrainMode::Base3, cfg.hidden1, cfg.hidden2);
  const std::size_t n = shape.param_count();

  PolicyGenerator& gen = res.generator;
  gen.graph = g;
  gen.shape = shape;
  gen.guard_features = cfg.guard_features;
  gen.edges.resize(g.edges.size());

  std::map<std::size_t, RLTask> tasks;
  std::map<std::size_t, AbstractGraph> graphs;
  for (auto i : train) {
    tasks.emplace(i, instantiate_task(task, i));
    graphs.emplace(i, instantiate_graph(g, task.update_pred, i).graph);
  }
  // instance -> vertex -> induced distribution; instance -> edge -> parameters.
  std::map<std::size_t, std::map<std::size_t, InitDistribution>> dists;
  std::map<std::size_t, std::map<std::size_t, PolicyParams>> inst_params;

  for (auto u : g.topological_order()) {
    compute_vertex_tables(res.tables, g, u, res.probs, train);
    for (auto i : train) {
      if (u == AbstractGraph::initial()) {
        dists[i][u] = tasks.at(i).init;
        continue;
      }
      if (res.tables.p(u, i) <= 0.0) continue;
      try {
        dists[i][u] = induce_distribution(u, i, res.tables.best(u, i), graphs.at(i), tasks.at(i), shape,
                                          inst_params[i], dists[i], cfg.n_particles, ars.test_steps,
                                          derive_seed(ars.seed, {0x1d, u, i}));
      } catch (const EmptyDistribution&) {
        res.warnings.push_back("instance " + std::to_string(i) + " never entered vertex " +
                               std::to_string(u));
      }
    }

    for (auto e : g.out_edges(u)) {
      EdgeReport rep;
      rep.edge = e;
      rep.from = u;
      rep.to = g.edges[e].to;
      for (auto i : train)
        if (dists[i].count(u)) rep.available.push_back(i);
      auto problem_for = [&](std::size_t i) {
        return make_edge_problem(graphs.at(i), e, tasks.at(i), shape, dists.at(i).at(u), i,
                                 ars.safety_penalty);
      };
      const std::uint64_t seed_e = derive_seed(ars.seed, {0xed9e, e});

      if (rep.available.empty()) {
        Rng rng = make_rng(seed_e);
        gen.edges[e] = {init_policy_params(shape, rng), neutral_kappa(cfg, mode, n)};
        res.warnings.push_back("edge e" + std::to_string(e) + " has no reachable instance");
        res.edges.push_back(std::move(rep));
        continue;
      }

      if (mode == TrainMode::GenRL) {
        std::optional<BaseResult> base;
        for (auto i : rep.available) {
          auto r = learn_base_policy(problem_for(i), ars, derive_seed(seed_e, {0xba5e, i}),
                                     ars.max_iters);
          if (!base || !r.infeasible) {
            base = std::move(r);
            rep.base_instance = i;
          }
          if (!base->infeasible) break;
        }
        rep.base_score = base->score;
        rep.base_success = base->success;
        rep.base_trace = base->ars.trace;

        std::vector<char> keep(rep.available.size(), 0);
        parallel_for(rep.available.size(), [&](std::size_t k) {
          std::size_t i = rep.available[k];
          // Instances before the base one already failed a full base training run.
          if (i < *rep.base_instance) return;
          if (i == rep.base_instance && !base->infeasible) {
            keep[k] = 1;
            return;
          }
          auto problem = problem_for(i);
          double s = edge_success(problem, base->params, ars.eval_rollouts_train, ars.test_steps,
                                  derive_seed(seed_e, {0x5cce55, i}));
          if (s > ars.feasibility_threshold) {
            keep[k] = 1;
            return;
          }
          auto probe = learn_base_policy(problem, ars, derive_seed(seed_e, {0x9b0be, i}),
                                         std::max<std::size_t>(1, ars.max_iters / 4), &base->params);
          keep[k] = probe.infeasible ? 0 : 1;
        });
        for (std::size_t k = 0; k < keep.size(); ++k)
          if (keep[k]) rep.train_e.push_back(rep.available[k]);

        KappaPolynomial kappa = neutral_kappa(cfg, mode, n);
        if (!rep.train_e.empty()) {
          std::vector<EdgeProblem> problems;
          for (auto i : rep.train_e) problems.push_back(problem_for(i));
          Rng rng = make_rng(derive_seed(seed_e, {0x4a11}));
          auto k0 = initial_kappa(cfg.templ, cfg.degree, n, rng, ars.kappa_init_scale);
          auto kr = learn_kappa(problems, base->params, k0, ars, derive_seed(seed_e, {0x4a99a}),
                                *rep.base_instance);
          kappa = std::move(kr.kappa);
          rep.kappa_score = kr.score;
          rep.kappa_trace = std::move(kr.ars.trace);
        } else {
          res.warnings.push_back("edge e" + std::to_string(e) + " is infeasible for every instance");
        }
        gen.edges[e] = {base->params, std::move(kappa), *rep.base_instance};
      } else {
        std::vector<EdgeProblem> problems;
        for (auto i : rep.available) problems.push_back(problem_for(i));
        auto shared_mode = mode == TrainMode::Base1 ? SharedMode::RoundRobin : SharedMode::Softmin;
        auto r = learn_shared_policy(problems, shared_mode, ars, seed_e,
                                     ars.max_iters + ars.kappa_max_iters);
        rep.base_score = r.score;
        rep.base_success = r.success;
        rep.base_trace = r.ars.trace;
        rep.train_e = rep.available;
        gen.edges[e] = {r.params, neutral_kappa(cfg, mode, n)};
      }

      // Edge success of the generated instance policies.
      std::vector<double> p(rep.available.size(), 0.0);
      std::vector<std::optional<PolicyParams>> params(rep.available.size());
      parallel_for(rep.available.size(), [&](std::size_t k) {
        std::size_t i = rep.available[k];
        try {
          params[k] = gen.edges[e].instance_params(i);
        } catch (const NumericOverflow&) {
          return;
        }
        p[k] = edge_success(problem_for(i), *params[k], ars.eval_rollouts_train, ars.test_steps,
                            derive_seed(seed_e, {0x9a0b, i}));
      });
      for (std::size_t k = 0; k < rep.available.size(); ++k) {
        std::size_t i = rep.available[k];
        res.probs[{e, i}] = p[k];
        if (params[k]) inst_params[i][e] = std::move(*params[k]);
      }
      res.edges.push_back(std::move(rep));
    }
  }
  res.timing["train"] = seconds_since(t_start);

  const auto t_guard = std::chrono::steady_clock::now();
  res.sets = build_decision_sets(g, res.tables, train);
  std::map<std::size_t, Vec> features;
  for (auto i : train) features[i] = instance_features(task, i, cfg.guard_features);
  for (auto u : g.branching_vertices()) {
    auto tree = guard_for(g, u, res.sets, features, cfg.guard_max_depth);
    if (!tree) {
      // No training instance completes through u; route everything to the first edge.
      tree = DecisionTree{{DecisionTree::Node{true, g.out_edges(u).front()}}};
      res.warnings.push_back("vertex " + std::to_string(u) + " has no guard data");
    }
    res.guard_expressions[u] = guard_expression(*tree, cfg.guard_features);
    gen.guards[u] = std::move(*tree);
  }
  res.timing["guards"] = seconds_since(t_guard);
  gen.validate();
  return res;
}

}  // namespace genrl
