#include <random>
#include <set>
#include <sstream>

#include <doctest.h>

#include "genrl/genrl.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace genrl;

namespace {

// 0 -> 1 (a), 0 -> 2 (b), 1 -> 3, 2 -> 3 (f); edges in that order.
AbstractGraph diamond() {
  AbstractGraph g;
  g.regions.assign(4, std::nullopt);
  g.edges = {{0, 1, {}}, {0, 2, {}}, {1, 3, {}}, {2, 3, {}}};
  g.finals = {3};
  g.final_safety.assign(4, {});
  return g;
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t k = 0; k < n; ++k) v[k] = k;
  return v;
}

GenrlConfig quick_config() {
  GenrlConfig c;
  c.ars.n_directions = 8;
  c.ars.top_b = 4;
  c.ars.max_iters = 40;
  c.ars.kappa_max_iters = 20;
  c.ars.score_rollouts = 4;
  c.ars.rollouts_per_direction = 2;
  c.ars.eval_rollouts_train = 40;
  c.hidden1 = 8;
  c.hidden2 = 8;
  c.n_particles = 20;
  return c;
}

}  // namespace

TEST_CASE("reach tables on the diamond") {
  auto g = diamond();
  EdgeProbs p{{{0, 0}, 0.9}, {{2, 0}, 0.8}, {{1, 0}, 0.5}, {{3, 0}, 0.9}};
  auto t = compute_reach_tables(g, p, {0});
  CHECK(t.p(0, 0) == 1.0);
  CHECK(t.p(3, 0) == doctest::Approx(0.72));
  CHECK(t.best(3, 0) == std::vector<std::size_t>{1});

  EdgeProbs tie{{{0, 1}, 0.5}, {{2, 1}, 1.0}, {{1, 1}, 1.0}, {{3, 1}, 0.5}};
  auto tt = compute_reach_tables(g, tie, {1});
  CHECK(tt.best(3, 1) == std::vector<std::size_t>{1, 2});
  // missing entries count as zero
  auto z = compute_reach_tables(g, {}, {2});
  CHECK(z.p(3, 2) == 0.0);
  CHECK(z.p(0, 2) == 1.0);
}

TEST_CASE("reach tables equal brute-force path enumeration") {
  std::mt19937_64 rng(51);
  std::uniform_int_distribution<std::size_t> nv(1, 8);
  std::uniform_int_distribution<int> pick(0, 5);
  std::uniform_real_distribution<double> U(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    auto g = oracle::random_dag(nv(rng), rng);
    std::vector<std::size_t> train{0, 1, 2};
    EdgeProbs probs;
    for (std::size_t e = 0; e < g.edges.size(); ++e)
      for (auto i : train) {
        // repeated values create ties, zeros create unreachable instances
        int k = pick(rng);
        double v = k == 0 ? 0.0 : k == 1 ? 0.5 : k == 2 ? 1.0 : U(rng);
        if (k != 5) probs[{e, i}] = v;
      }
    auto t = compute_reach_tables(g, probs, train);
    auto o = oracle::reach_by_paths(g, probs, train);
    for (std::size_t u = 0; u < g.vertex_count(); ++u)
      for (auto i : train) {
        REQUIRE(t.p(u, i) == o.prob.at({u, i}));
        const auto& b = t.best(u, i);
        REQUIRE(std::set<std::size_t>(b.begin(), b.end()) == o.best_in.at({u, i}));
        REQUIRE(std::is_sorted(b.begin(), b.end()));
      }
    auto sets = build_decision_sets(g, t, train);
    auto expect = oracle::decision_sets_by_paths(g, o, train);
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
      std::set<std::size_t> got(sets[e].begin(), sets[e].end());
      REQUIRE(got == std::set<std::size_t>(expect[e].begin(), expect[e].end()));
      REQUIRE(got.size() == sets[e].size());
    }
  }
}

TEST_CASE("decision sets") {
  SUBCASE("a chain uses every edge for every instance") {
    AbstractGraph g;
    g.regions.assign(3, std::nullopt);
    g.edges = {{0, 1, {}}, {1, 2, {}}};
    g.finals = {2};
    g.final_safety.assign(3, {});
    EdgeProbs p;
    for (std::size_t i = 0; i < 4; ++i) {
      p[{0, i}] = 0.5 + 0.1 * double(i);
      p[{1, i}] = 0.9;
    }
    auto t = compute_reach_tables(g, p, iota(4));
    auto s = build_decision_sets(g, t, iota(4));
    CHECK(s[0] == iota(4));
    CHECK(s[1] == iota(4));
  }
  SUBCASE("a diamond splits by instance") {
    auto g = diamond();
    EdgeProbs p;
    for (std::size_t i = 0; i < 10; ++i) {
      bool left = i <= 4;
      p[{0, i}] = left ? 0.95 : 0.2;
      p[{1, i}] = left ? 0.1 : 0.97;
      p[{2, i}] = 0.99;
      p[{3, i}] = 0.99;
    }
    auto t = compute_reach_tables(g, p, iota(10));
    auto s = build_decision_sets(g, t, iota(10));
    CHECK(s[0] == std::vector<std::size_t>{0, 1, 2, 3, 4});
    CHECK(s[1] == std::vector<std::size_t>{5, 6, 7, 8, 9});
    auto [xs, ys] = guard_dataset(g, 0, s);
    CHECK(xs == iota(10));
    std::map<std::size_t, Vec> feats;
    for (auto i : iota(10)) feats[i] = {double(i)};
    auto guards = learn_guards(g, s, feats);
    REQUIRE(guards.count(0));
    CHECK(guard_expression(guards.at(0), GuardFeatures::TaskIndex) == "i <= 4 ? e0 : e1");
    CHECK(guard_expression(guards.at(0), GuardFeatures::InitMean) == "x0 <= 4.5 ? e0 : e1");
  }
  SUBCASE("empty train gives empty sets and an unguardable vertex") {
    auto g = diamond();
    auto t = compute_reach_tables(g, {}, {});
    auto s = build_decision_sets(g, t, {});
    for (std::size_t e = 0; e < 4; ++e) CHECK(s[e].empty());
    CHECK_THROWS_AS(learn_guards(g, s, {}), UnguardableVertex);
  }
  SUBCASE("instances on both best edges go to the first") {
    auto g = diamond();
    EdgeProbs p{{{0, 0}, 1.0}, {{1, 0}, 1.0}, {{2, 0}, 1.0}, {{3, 0}, 1.0}};
    auto t = compute_reach_tables(g, p, {0});
    auto s = build_decision_sets(g, t, {0});
    CHECK(s[0] == std::vector<std::size_t>{0});
    CHECK(s[1] == std::vector<std::size_t>{0});
    auto [xs, ys] = guard_dataset(g, 0, s);
    CHECK(xs == std::vector<std::size_t>{0});
    CHECK(ys == std::vector<std::size_t>{0});
  }
}

TEST_CASE("induced distributions") {
  RegionTable regions{{"a", {3, 0}}, {"b", {3, 3}}};
  RLTask task{parse_spec("achieve reach(a, 0.3); achieve reach(b, 0.3)", regions),
              InitDistribution::point({0, 0}), make_car2d()};
  auto g = compile_spec(task.spec);
  auto shape = PolicyShape::for_env(task.env, false, 4, 4);
  std::map<std::size_t, PolicyParams> params{{0, constant_policy(shape, {30, 0})},
                                             {1, constant_policy(shape, {0, 30})}};
  std::map<std::size_t, InitDistribution> dists{{0, task.init}};

  auto d0 = induce_distribution(0, 0, {}, g, task, shape, params, dists, 10, 60, 1);
  CHECK(d0.kind == InitDistribution::Kind::Point);
  CHECK(d0.lo == task.init.lo);

  // deterministic start and dynamics: one repeated particle
  auto d1 = induce_distribution(1, 0, {0}, g, task, shape, params, dists, 10, 60, 1);
  REQUIRE(d1.kind == InitDistribution::Kind::Empirical);
  CHECK(d1.particles.size() == 10);
  for (const auto& p : d1.particles) CHECK(p == Vec{3, 0});

  // a box start gives varied particles that all lie in the target region
  std::map<std::size_t, InitDistribution> box{{0, InitDistribution::uniform_box({-0.1, -0.1}, {0.1, 0.1})}};
  auto d2 = induce_distribution(1, 0, {0}, g, task, shape, params, box, 25, 60, 2);
  for (const auto& p : d2.particles) CHECK(region_contains(g.regions[1], p));

  // a policy that never arrives leaves nothing
  std::map<std::size_t, PolicyParams> stuck{{0, constant_policy(shape, {-30, 0})}};
  CHECK_THROWS_AS(induce_distribution(1, 0, {0}, g, task, shape, stuck, dists, 10, 60, 1),
                  EmptyDistribution);
}

TEST_CASE("train mode names") {
  for (auto m : {TrainMode::GenRL, TrainMode::Base1, TrainMode::Base2, TrainMode::Base3})
    CHECK(parse_train_mode(train_mode_name(m)) == m);
  CHECK_THROWS_AS(parse_train_mode("base4"), InvalidInput);
}

TEST_CASE("single-edge task trains one edge without guards, reproducibly") {
  RegionTable regions{{"g", {1.5, 0}}};
  InductiveTask task{RLTask{parse_spec("achieve reach(g, 0.3)", regions),
                            InitDistribution::uniform_box({-0.1, -0.1}, {0.1, 0.1}), make_car2d()},
                     {}, {0.1, 0}, {}, std::nullopt};
  auto cfg = quick_config();
  auto a = run_genrl(task, {0, 1, 2}, cfg);
  CHECK(a.generator.edges.size() == 1);
  CHECK(a.generator.guards.empty());
  CHECK(a.sets.at(0) == std::vector<std::size_t>{0, 1, 2});
  REQUIRE(a.edges.size() == 1);
  CHECK(a.edges[0].base_instance == 0u);
  CHECK(a.probs.at({0, 0}) > 0.9);

  auto b = run_genrl(task, {0, 1, 2}, cfg);
  std::ostringstream sa, sb;
  save_generator(sa, a.generator);
  save_generator(sb, b.generator);
  CHECK(sa.str() == sb.str());
  CHECK(a.probs == b.probs);

  CHECK_THROWS_AS(run_genrl(task, {1, 2}, cfg), InvalidInput);
  CHECK_THROWS_AS(run_genrl(task, {}, cfg), InvalidInput);
}

TEST_CASE("baselines share one policy per edge") {
  RegionTable regions{{"g", {1.5, 0}}};
  InductiveTask task{RLTask{parse_spec("achieve reach(g, 0.3)", regions),
                            InitDistribution::uniform_box({-0.1, -0.1}, {0.1, 0.1}), make_car2d()},
                     {}, {0.1, 0}, {}, std::nullopt};
  auto cfg = quick_config();
  for (auto mode : {TrainMode::Base1, TrainMode::Base2, TrainMode::Base3}) {
    auto r = train_baseline(mode, task, {0, 1}, cfg);
    const auto& e = r.generator.edges.at(0);
    CHECK(e.kappa.templ == KappaPolynomial::Template::ConstantUpdate);
    CHECK(e.instance_params(5).flat == e.base.flat);
    CHECK(r.generator.shape.include_task_index == (mode == TrainMode::Base3));
    CHECK(r.generator.shape.network_input_dim() == 2 + (mode == TrainMode::Base3 ? 1 : 0));
  }
}
