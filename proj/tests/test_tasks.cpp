#include <doctest.h>

#include "genrl/abstract_graph.hpp"
#include "genrl/tasks.hpp"
#include "test_util.hpp"

using namespace genrl;

namespace {

// Spec trees with parameters ignored.
bool same_shape(const Spec& a, const Spec& b) {
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case SpecKind::Achieve: return a.predicate().kind == b.predicate().kind;
    case SpecKind::Ensuring:
      return a.predicate().kind == b.predicate().kind && same_shape(a.lhs(), b.lhs());
    default: return same_shape(a.lhs(), b.lhs()) && same_shape(a.rhs(), b.rhs());
  }
}

AtomicPredicate find_label(const Spec& s, const std::string& label) {
  for (const auto& p : collect_predicates(s))
    if (p.label == label) return p;
  FAIL("no predicate labeled " << label);
  return {};
}

}  // namespace

TEST_CASE("instance 0 is the base task") {
  for (const auto& id : benchmark_ids()) {
    CAPTURE(id);
    auto b = make_benchmark(id);
    auto t0 = instantiate_task(b.task, 0);
    CHECK(t0.spec == b.task.base.spec);
    CHECK(t0.init.lo == b.task.base.init.lo);
    CHECK(t0.init.hi == b.task.base.init.hi);
    CHECK(t0.env.params == b.task.base.env.params);
    CHECK(std::find(b.train.begin(), b.train.end(), 0) != b.train.end());
  }
}

TEST_CASE("moving initial distribution shifts by half a unit per instance") {
  auto b = make_benchmark("reach_moving_init");
  auto t4 = instantiate_task(b.task, 4);
  CHECK(t4.init.lo[0] == doctest::Approx(b.task.base.init.lo[0] + 2.0).epsilon(1e-12));
  CHECK(t4.init.lo[1] == b.task.base.init.lo[1]);
  CHECK(t4.spec == b.task.base.spec);
  CHECK(b.train.size() == 10);
}

TEST_CASE("choice with moving goal translates the goal only") {
  auto b = make_benchmark("choice_moving_goal");
  auto t3 = instantiate_task(b.task, 3);
  auto g0 = find_label(b.task.base.spec, "goal");
  auto g3 = find_label(t3.spec, "goal");
  CHECK(g3.params[0] == doctest::Approx(g0.params[0] + 4.5).epsilon(1e-12));
  CHECK(g3.params[1] == g0.params[1]);
  CHECK(find_label(t3.spec, "g1") == find_label(b.task.base.spec, "g1"));
  CHECK(b.train.size() == 6);
}

TEST_CASE("destacking instances follow the tower") {
  auto b = make_benchmark("destack_vertical_opposite_side");
  REQUIRE(b.task.horizon == 8u);
  const double bh = 1.5;
  auto t0 = instantiate_task(b.task, 0);
  auto t1 = instantiate_task(b.task, 1);
  auto t3 = instantiate_task(b.task, 3);
  auto src0 = find_label(t0.spec, "source"), src1 = find_label(t1.spec, "source");
  auto tgt0 = find_label(t0.spec, "target"), tgt1 = find_label(t1.spec, "target");
  CHECK(src1.params[1] == doctest::Approx(src0.params[1] - bh));
  CHECK(tgt1.params[1] == doctest::Approx(tgt0.params[1] + bh));
  // h = 8, instance 3: target slot 3, source slot 4, start above source slot 5
  CHECK(find_label(t3.spec, "target").params[1] == doctest::Approx(3 * bh));
  CHECK(find_label(t3.spec, "source").params[1] == doctest::Approx(4 * bh));
  CHECK(t3.init.lo[1] > 5 * bh);
  CHECK(t3.init.hi[1] < 6 * bh);
  CHECK(t3.spec.kind() == SpecKind::Seq);
  CHECK(t3.spec.lhs().predicate().label == "target");
  CHECK_THROWS_AS(instantiate_task(b.task, 8), InvalidInput);
  auto small = make_benchmark("destack_vertical_opposite_side", BenchmarkOptions{4, std::nullopt});
  CHECK(small.task.horizon == 4u);
}

TEST_CASE("nreach requires the waypoints in order") {
  auto b = make_benchmark("nreach_2");
  auto g1 = find_label(b.task.base.spec, "g1");
  auto g2 = find_label(b.task.base.spec, "g2");
  Vec c1{g1.params[0], g1.params[1]}, c2{g2.params[0], g2.params[1]};
  auto t = instantiate_task(b.task, 0);
  CHECK(task_satisfied(t, make_traj({{0, 0}, c1, c2})));
  CHECK_FALSE(task_satisfied(t, make_traj({{0, 0}, c2})));
  CHECK_FALSE(task_satisfied(t, make_traj({{0, 0}, c2, c1})));
}

TEST_CASE("reach with obstacle rejects crossing trajectories") {
  auto b = make_benchmark("reach_moving_init_obs");
  auto t = instantiate_task(b.task, 0);
  auto g = find_label(t.spec, "g1");
  CHECK(task_satisfied(t, make_traj({{0, 0}, {3, 0}, {g.params[0], g.params[1]}})));
  CHECK_FALSE(task_satisfied(t, make_traj({{0, 0}, {1.5, 2.5}, {g.params[0], g.params[1]}})));
}

TEST_CASE("instances share the spec shape and compose updates") {
  for (const auto& id : benchmark_ids()) {
    CAPTURE(id);
    auto b = make_benchmark(id);
    auto base_graph = compile_spec(b.task.base.spec);
    for (std::size_t i : {1, 2, 3}) {
      if (b.task.horizon && i >= *b.task.horizon) continue;
      auto t = instantiate_task(b.task, i);
      CHECK(same_shape(t.spec, b.task.base.spec));
      auto g = compile_spec(t.spec);
      CHECK(g.vertex_count() == base_graph.vertex_count());
      CHECK(g.edges.size() == base_graph.edges.size());
      // graph instantiation and task instantiation agree
      auto gi = instantiate_graph(base_graph, b.task.update_pred, i);
      for (std::size_t u = 0; u < g.vertex_count(); ++u) CHECK(gi.graph.regions[u] == g.regions[u]);
    }
  }
}

TEST_CASE("environment parameters grow for classic control") {
  auto b = make_benchmark("cartpole");
  auto t2 = instantiate_task(b.task, 2);
  CHECK(t2.env.params[0] == doctest::Approx(b.task.base.env.params[0] + 0.8));
  CHECK(b.test_steps == 200);
}

TEST_CASE("catalog options and errors") {
  CHECK_THROWS_AS(make_benchmark("no_such_benchmark"), InvalidInput);
  auto b = make_benchmark("reach_moving_init", BenchmarkOptions{std::nullopt, 0.5});
  CHECK(b.task.base.spec.predicate().params.back() == 0.5);
  CHECK(benchmark_ids().size() >= 20);
}
