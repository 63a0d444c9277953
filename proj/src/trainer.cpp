#include "genrl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace genrl {

void ArsConfig::validate() const {
  if (n_directions < 1) throw InvalidInput("ARS needs at least one direction");
  if (top_b < 1 || top_b > n_directions) throw InvalidInput("top_b must lie in [1, n_directions]");
  if (!(kappa_init_scale >= 0.0)) throw InvalidInput("kappa_init_scale must be non-negative");
  if (!(delta_scale > 0.0) || !(kappa_delta_scale > 0.0))
    throw InvalidInput("perturbation scales must be positive");
  if (!(alpha_init > 0.0) || !(alpha_min > 0.0) || alpha_min > alpha_init)
    throw InvalidInput("step sizes must satisfy 0 < alpha_min <= alpha_init");
  if (!(softmin_tau > 0.0)) throw InvalidInput("softmin temperature must be positive");
  if (train_steps < 1 || test_steps < 1) throw InvalidInput("rollout budgets must be at least 1");
  if (eval_rollouts_train < 1 || rollouts_per_direction < 1 || score_rollouts < 1)
    throw InvalidInput("rollout counts must be at least 1");
  if (decay_patience < 1 || converge_window < 1) throw InvalidInput("ARS windows must be at least 1");
  if (safety_penalty < 0.0) throw InvalidInput("safety penalty must be non-negative");
}

double goal_distance(const AtomicPredicate& target, std::span<const double> s) {
  const auto& q = target.params;
  switch (target.kind) {
    case PredicateKind::ReachBall: {
      std::size_t n = q.size() - 1;
      return l2_distance(s.first(n), std::span(q).first(n));
    }
    case PredicateKind::InRect:
    case PredicateKind::AvoidRect: {
      double cx = 0.5 * (q[0] + q[2]), cy = 0.5 * (q[1] + q[3]);
      return std::hypot(s[0] - cx, s[1] - cy);
    }
    case PredicateKind::HoldPole:
      return std::abs(s[2] - q[0]) + q[1] * std::max(0.0, q[2] - s[4]) / q[2];
    case PredicateKind::ReachTheta: {
      double d = std::remainder(s[0] - q[0], 2 * std::numbers::pi);
      return std::abs(d);
    }
    case PredicateKind::ReachTip:
      return std::max(0.0, q[0] - (-std::cos(s[0]) - std::cos(s[0] + s[1])));
  }
  return 0.0;
}

double edge_reward(const Trajectory& traj, const RewardSpec& spec) {
  if (traj.states.empty()) throw InvalidInput("trajectory has no states");
  double r = -goal_distance(spec.target, traj.states.back());
  std::size_t violations = 0;
  for (const auto& s : traj.states)
    for (const auto& p : spec.safety)
      if (!eval_predicate(p, s)) {
        ++violations;
        break;
      }
  return r - spec.safety_penalty * static_cast<double>(violations);
}

double softmin_score(std::span<const double> rewards, double tau) {
  if (rewards.empty()) throw InvalidInput("softmin of an empty set");
  if (!(tau > 0.0)) throw InvalidInput("softmin temperature must be positive");
  double lo = *std::min_element(rewards.begin(), rewards.end());
  double num = 0.0, den = 0.0;
  for (double r : rewards) {
    double w = std::exp(-(r - lo) / tau);
    num += w * r;
    den += w;
  }
  return num / den;
}

Vec perturb(std::span<const double> v, std::span<const double> delta, double scale) {
  if (v.size() != delta.size()) throw InvalidInput("perturbation length mismatch");
  Vec out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) out[k] = v[k] + scale * delta[k];
  return out;
}

Vec delta_update(const std::vector<DirectionSample>& samples, std::size_t top_b, double alpha) {
  if (samples.empty()) throw InvalidInput("delta_update needs samples");
  if (top_b < 1 || top_b > samples.size()) throw InvalidInput("top_b out of range");
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  auto key = [&](std::size_t k) { return std::max(samples[k].r_plus, samples[k].r_minus); };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key(a) > key(b); });
  order.resize(top_b);
  // Sum in original sample order so the result does not depend on sort stability.
  std::sort(order.begin(), order.end());

  double mean = 0.0;
  for (auto k : order) mean += samples[k].r_plus + samples[k].r_minus;
  mean /= static_cast<double>(2 * top_b);
  double var = 0.0;
  for (auto k : order) {
    var += (samples[k].r_plus - mean) * (samples[k].r_plus - mean);
    var += (samples[k].r_minus - mean) * (samples[k].r_minus - mean);
  }
  double sigma = std::max(std::sqrt(var / static_cast<double>(2 * top_b)), 1e-8);

  Vec step(samples[order.front()].delta.size(), 0.0);
  for (auto k : order) {
    if (samples[k].delta.size() != step.size()) throw InvalidInput("sample deltas differ in length");
    double w = samples[k].r_plus - samples[k].r_minus;
    for (std::size_t j = 0; j < step.size(); ++j) step[j] += w * samples[k].delta[j];
  }
  double c = alpha / (static_cast<double>(top_b) * sigma);
  for (auto& x : step) x *= c;
  return step;
}

ArsResult ars_optimize(Vec x0,
                       const std::function<double(const Vec&, std::size_t, std::uint64_t)>& train_score,
                       const std::function<double(const Vec&)>& eval_score, const ArsConfig& cfg,
                       double delta_scale, std::size_t max_iters, std::uint64_t seed) {
  cfg.validate();
  ArsResult res;
  Vec x = std::move(x0);
  res.best = x;
  res.best_score = eval_score(x);
  std::vector<double> history{res.best_score};
  double alpha = cfg.alpha_init;
  std::size_t stall = 0;
  const std::size_t n = cfg.n_directions;

  for (std::size_t it = 0; it < max_iters; ++it) {
    std::vector<DirectionSample> samples(n);
    parallel_for(n, [&](std::size_t d) {
      Vec dir(x.size());
      Rng rng = make_rng(derive_seed(seed, {it, d, 0}));
      fill_normal(rng, dir);
      std::uint64_t stream = derive_seed(seed, {it, d, 1});
      Vec plus = perturb(x, dir, delta_scale);
      Vec minus = perturb(x, dir, -delta_scale);
      DirectionSample& s = samples[d];
      s.r_plus = train_score(plus, it, stream);
      s.r_minus = train_score(minus, it, stream);
      for (auto& v : dir) v *= delta_scale;
      s.delta = std::move(dir);
    });
    double mean = 0.0;
    for (const auto& s : samples) mean += s.r_plus + s.r_minus;
    mean /= static_cast<double>(2 * n);

    Vec step = delta_update(samples, cfg.top_b, alpha);
    for (std::size_t j = 0; j < x.size(); ++j) x[j] += step[j];

    double score = eval_score(x);
    if (score > res.best_score) {
      res.best_score = score;
      res.best = x;
      stall = 0;
    } else if (++stall >= cfg.decay_patience) {
      alpha = std::max(alpha / 2.0, cfg.alpha_min);
      stall = 0;
    }
    res.trace.push_back({it, res.best_score, mean, alpha});
    history.push_back(res.best_score);
    res.iterations = it + 1;
    std::size_t done = history.size() - 1;
    if (done >= cfg.converge_window &&
        history[done] - history[done - cfg.converge_window] < cfg.converge_tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------

EdgeProblem make_edge_problem(const AbstractGraph& graph, std::size_t edge, const RLTask& task,
                              const PolicyShape& shape, InitDistribution init, std::size_t instance,
                              double safety_penalty) {
  const auto& e = graph.edges.at(edge);
  const Region& target = graph.regions[e.to];
  if (!target) throw ConsistencyError("edge target has no region");
  EdgeProblem p{task.env,
                shape,
                std::move(init),
                target,
                RewardSpec{*target, e.safety, safety_penalty},
                e.from == AbstractGraph::initial(),
                instance};
  return p;
}

EdgeRollout rollout_edge(const EdgeProblem& problem, const PolicyParams& params,
                         std::span<const double> s0, std::size_t max_steps) {
  EdgeRollout out;
  out.traj.states.emplace_back(s0.begin(), s0.end());
  std::optional<std::size_t> index;
  if (problem.shape.include_task_index) index = problem.instance;
  bool entered = problem.check_start && region_contains(problem.target, s0);
  while (!entered && out.traj.actions.size() < max_steps) {
    const Vec& s = out.traj.states.back();
    Vec a = policy_act(params, problem.shape, observe(problem.env, s), index);
    Vec next = env_step(problem.env, s, a);
    out.traj.actions.push_back(std::move(a));
    out.traj.states.push_back(std::move(next));
    entered = region_contains(problem.target, out.traj.states.back());
  }
  out.entered = entered;
  bool safe = true;
  for (const auto& s : out.traj.states)
    for (const auto& p : problem.reward.safety)
      if (!eval_predicate(p, s)) safe = false;
  out.success = entered && safe;
  return out;
}

namespace {

Vec start_state(const EdgeProblem& problem, std::uint64_t seed, std::size_t k) {
  Rng rng = make_rng(derive_seed(seed, {k}));
  return env_reset(problem.env, sample_init(problem.init, rng));
}

}  // namespace

double mean_edge_reward(const EdgeProblem& problem, const PolicyParams& params, std::size_t n,
                        std::size_t max_steps, std::uint64_t seed) {
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    auto r = rollout_edge(problem, params, start_state(problem, seed, k), max_steps);
    total += edge_reward(r.traj, problem.reward);
  }
  return total / static_cast<double>(n);
}

double edge_success(const EdgeProblem& problem, const PolicyParams& params, std::size_t n,
                    std::size_t max_steps, std::uint64_t seed) {
  std::size_t ok = 0;
  for (std::size_t k = 0; k < n; ++k)
    if (rollout_edge(problem, params, start_state(problem, seed, k), max_steps).success) ++ok;
  return static_cast<double>(ok) / static_cast<double>(n);
}

BaseResult learn_base_policy(const EdgeProblem& problem, const ArsConfig& cfg, std::uint64_t seed,
                             std::size_t max_iters, const PolicyParams* init) {
  PolicyParams x0;
  if (init) {
    x0 = *init;
  } else {
    Rng rng = make_rng(derive_seed(seed, {0x1a17}));
    x0 = init_policy_params(problem.shape, rng);
  }
  std::uint64_t eval_seed = derive_seed(seed, {0xe7a1});
  auto train = [&](const Vec& x, std::size_t, std::uint64_t stream) {
    return mean_edge_reward(problem, PolicyParams{x}, cfg.rollouts_per_direction, cfg.train_steps,
                            stream);
  };
  auto eval = [&](const Vec& x) {
    return mean_edge_reward(problem, PolicyParams{x}, cfg.score_rollouts, cfg.train_steps, eval_seed);
  };
  BaseResult out;
  out.ars = ars_optimize(std::move(x0.flat), train, eval, cfg, cfg.delta_scale, max_iters,
                         derive_seed(seed, {0xa25}));
  out.params.flat = out.ars.best;
  out.score = out.ars.best_score;
  out.success = edge_success(problem, out.params, cfg.eval_rollouts_train, cfg.test_steps,
                             derive_seed(seed, {0x5cce55}));
  out.infeasible = out.success <= cfg.feasibility_threshold;
  return out;
}

KappaPolynomial initial_kappa(KappaPolynomial::Template templ, std::size_t degree, std::size_t n,
                              Rng& rng, double scale) {
  if (!(scale >= 0.0)) throw InvalidInput("kappa init scale must be non-negative");
  KappaPolynomial k;
  k.templ = templ;
  std::size_t count = templ == KappaPolynomial::Template::ConstantUpdate ? 1 : degree + 1;
  if (templ == KappaPolynomial::Template::Polynomial && degree < 1)
    throw InvalidInput("polynomial kappa needs degree >= 1");
  k.coeffs.assign(count, Vec(n));
  for (std::size_t d = 0; d < count; ++d) {
    fill_normal(rng, k.coeffs[d]);
    for (auto& v : k.coeffs[d]) v *= scale;
    if (templ == KappaPolynomial::Template::Polynomial && d == 1)
      for (auto& v : k.coeffs[d]) v += 1.0;
  }
  return k;
}

namespace {

// Parameters for each problem's instance, unrolling once up to the largest index.
std::vector<PolicyParams> unroll_for(const KappaPolynomial& kappa, const PolicyParams& base,
                                     const std::vector<EdgeProblem>& problems, std::size_t offset) {
  std::size_t top = 0;
  for (const auto& p : problems) top = std::max(top, p.instance - offset);
  std::vector<PolicyParams> by_index;
  by_index.reserve(top + 1);
  by_index.push_back(base);
  for (std::size_t i = 1; i <= top; ++i) {
    PolicyParams next{kappa_step(kappa, by_index.back().flat)};
    if (!all_finite(next.flat)) throw NumericOverflow(i + offset);
    by_index.push_back(std::move(next));
  }
  std::vector<PolicyParams> out;
  for (const auto& p : problems) out.push_back(by_index[p.instance - offset]);
  return out;
}

double kappa_score(const std::vector<EdgeProblem>& problems, const PolicyParams& base,
                   const KappaPolynomial& kappa, std::size_t offset, std::size_t rollouts,
                   std::size_t steps, std::uint64_t stream, double tau) {
  auto params = unroll_for(kappa, base, problems, offset);
  Vec rewards(problems.size());
  for (std::size_t k = 0; k < problems.size(); ++k)
    rewards[k] = mean_edge_reward(problems[k], params[k], rollouts, steps,
                                  derive_seed(stream, {problems[k].instance}));
  return softmin_score(rewards, tau);
}

}  // namespace

KappaResult learn_kappa(const std::vector<EdgeProblem>& problems, const PolicyParams& base,
                        const KappaPolynomial& init, const ArsConfig& cfg, std::uint64_t seed,
                        std::size_t offset) {
  if (problems.empty()) throw InvalidInput("learn_kappa needs at least one instance");
  for (const auto& p : problems)
    if (p.instance < offset) throw InvalidInput("kappa instance below the base offset");
  init.validate();
  const auto templ = init.templ;
  const auto degree = init.degree();
  const auto n = init.length();
  std::uint64_t eval_seed = derive_seed(seed, {0xe7a1});
  auto unpack = [&](const Vec& x) { return KappaPolynomial::unflatten(templ, degree, n, x); };
  auto train = [&](const Vec& x, std::size_t, std::uint64_t stream) {
    return kappa_score(problems, base, unpack(x), offset, cfg.rollouts_per_direction, cfg.train_steps, stream,
                       cfg.softmin_tau);
  };
  auto eval = [&](const Vec& x) {
    return kappa_score(problems, base, unpack(x), offset, cfg.score_rollouts, cfg.train_steps, eval_seed,
                       cfg.softmin_tau);
  };
  KappaResult out;
  out.ars = ars_optimize(init.flatten(), train, eval, cfg, cfg.kappa_delta_scale, cfg.kappa_max_iters,
                         derive_seed(seed, {0x4a99a}));
  out.kappa = unpack(out.ars.best);
  out.score = out.ars.best_score;
  return out;
}

BaseResult learn_shared_policy(const std::vector<EdgeProblem>& problems, SharedMode mode,
                               const ArsConfig& cfg, std::uint64_t seed, std::size_t max_iters) {
  if (problems.empty()) throw InvalidInput("shared policy needs at least one instance");
  Rng rng = make_rng(derive_seed(seed, {0x1a17}));
  PolicyParams x0 = init_policy_params(problems.front().shape, rng);
  std::uint64_t eval_seed = derive_seed(seed, {0xe7a1});
  auto softmin_over = [&](const Vec& x, std::size_t rollouts, std::uint64_t stream) {
    Vec rewards(problems.size());
    for (std::size_t k = 0; k < problems.size(); ++k)
      rewards[k] = mean_edge_reward(problems[k], PolicyParams{x}, rollouts, cfg.train_steps,
                                    derive_seed(stream, {problems[k].instance}));
    return softmin_score(rewards, cfg.softmin_tau);
  };
  auto train = [&](const Vec& x, std::size_t it, std::uint64_t stream) {
    if (mode == SharedMode::RoundRobin) {
      const auto& p = problems[it % problems.size()];
      return mean_edge_reward(p, PolicyParams{x}, cfg.rollouts_per_direction, cfg.train_steps, stream);
    }
    return softmin_over(x, cfg.rollouts_per_direction, stream);
  };
  auto eval = [&](const Vec& x) { return softmin_over(x, cfg.score_rollouts, eval_seed); };
  BaseResult out;
  out.ars = ars_optimize(std::move(x0.flat), train, eval, cfg, cfg.delta_scale, max_iters,
                         derive_seed(seed, {0xa25}));
  out.params.flat = out.ars.best;
  out.score = out.ars.best_score;
  double total = 0.0;
  for (const auto& p : problems)
    total += edge_success(p, out.params, cfg.eval_rollouts_train, cfg.test_steps,
                          derive_seed(seed, {0x5cce55, p.instance}));
  out.success = total / static_cast<double>(problems.size());
  out.infeasible = out.success <= cfg.feasibility_threshold;
  return out;
}

}  // namespace genrl
