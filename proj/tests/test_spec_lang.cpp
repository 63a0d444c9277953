#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "genrl/spec_lang.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace genrl;

TEST_CASE("predicates evaluate on states") {
  CHECK(eval_predicate(AtomicPredicate::reach_ball({0, 0}, 1), Vec{0, 0}));
  CHECK_FALSE(eval_predicate(AtomicPredicate::reach_ball({0, 0}, 1), Vec{1, 0}));  // strict
  CHECK_FALSE(eval_predicate(AtomicPredicate::avoid_rect(4, 4, 6, 6), Vec{5, 5}));
  CHECK_FALSE(eval_predicate(AtomicPredicate::avoid_rect(4, 4, 6, 6), Vec{4, 6}));  // closed
  CHECK(eval_predicate(AtomicPredicate::in_rect(0, 0, 1, 1), Vec{1, 1}));
  CHECK(eval_predicate(AtomicPredicate::reach_tip(1), Vec{std::numbers::pi, 0, 0, 0}));
  CHECK_FALSE(eval_predicate(AtomicPredicate::reach_tip(1), Vec{0, 0, 0, 0}));
  CHECK(eval_predicate(AtomicPredicate::reach_theta(0, 0.1), Vec{0.05, 3}));
  CHECK(eval_predicate(AtomicPredicate::hold_pole(0, 0.2, 3), Vec{0, 0, 0.1, 0, 3}));
  CHECK_FALSE(eval_predicate(AtomicPredicate::hold_pole(0, 0.2, 3), Vec{0, 0, 0.1, 0, 2}));
  CHECK_THROWS_AS(eval_predicate(AtomicPredicate::reach_ball({0, 0, 0}, 1), Vec{0, 0}),
                  InvalidInput);
}

TEST_CASE("predicate construction rejects bad parameters") {
  CHECK_THROWS_AS(AtomicPredicate::reach_ball({0, 0}, -1), InvalidInput);
  CHECK_THROWS_AS(AtomicPredicate::in_rect(1, 0, 0, 1), InvalidInput);
  CHECK_THROWS_AS(AtomicPredicate::from_params(PredicateKind::InRect, {0, 0, 1}), InvalidInput);
}

TEST_CASE("shift_predicate translates positional parameters") {
  auto p = shift_predicate(AtomicPredicate::reach_ball({1, 1}, 0.5), Vec{0.5, 0});
  CHECK(p == AtomicPredicate::reach_ball({1.5, 1}, 0.5));
  auto r = AtomicPredicate::in_rect(0, 0, 1, 1);
  CHECK(shift_predicate(r, Vec{0, 0}) == r);
  CHECK(shift_predicate(r, Vec{2, 3}) == AtomicPredicate::in_rect(2, 3, 3, 4));
  CHECK_THROWS_AS(shift_predicate(r, Vec{1}), InvalidInput);
}

TEST_CASE("shift composition") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> I(-8, 8);
  for (int t = 0; t < 200; ++t) {
    // quarter-integers keep the sums exact
    Vec d1{I(rng) / 4.0, I(rng) / 4.0}, d2{I(rng) / 4.0, I(rng) / 4.0};
    Vec sum{d1[0] + d2[0], d1[1] + d2[1]};
    auto p = AtomicPredicate::in_rect(I(rng), I(rng), 9, 9);
    CHECK(shift_predicate(shift_predicate(p, d1), d2) == shift_predicate(p, sum));
  }
}

TEST_CASE("apply_update repeats the translation") {
  auto p = AtomicPredicate::reach_ball({0, 0}, 0.3, "goal");
  PredicateUpdate up{{"goal", {1.5, 0}}};
  CHECK(apply_update(p, up, 0) == p);
  CHECK(apply_update(p, up, 3) == AtomicPredicate::reach_ball({4.5, 0}, 0.3));
  auto q = AtomicPredicate::reach_ball({0, 0}, 0.3, "other");
  CHECK(apply_update(q, up, 3) == q);
}

TEST_CASE("eval_spec small cases") {
  auto b = AtomicPredicate::reach_ball({0, 0}, 0.5);
  auto b2 = AtomicPredicate::reach_ball({2, 0}, 0.5);
  auto c = AtomicPredicate::avoid_rect(0.9, -1, 1.1, 1);
  Trajectory z = make_traj({{0, 0}, {1, 0}, {2, 0}});
  CHECK(eval_spec(Spec::achieve(b), z));
  CHECK_FALSE(eval_spec(Spec::ensuring(Spec::achieve(b), c), z));
  CHECK(eval_spec(Spec::seq(Spec::achieve(b), Spec::achieve(b2)), z));
  // single state: no valid split
  CHECK_FALSE(eval_spec(Spec::seq(Spec::achieve(b), Spec::achieve(b)), make_traj({{0, 0}})));
  // the second part starts strictly after the split
  CHECK_FALSE(eval_spec(Spec::seq(Spec::achieve(b), Spec::achieve(b)), make_traj({{0, 0}, {5, 5}})));
  CHECK(eval_spec(Spec::seq(Spec::achieve(b), Spec::achieve(b)), make_traj({{0, 0}, {0, 0}})));
}

TEST_CASE("eval_spec agrees with the brute-force evaluator") {
  std::mt19937_64 rng(11);
  for (int s = 0; s < 40; ++s) {
    Spec spec = random_spec(rng, 4);
    for (int t = 0; t < 300; ++t) {
      auto z = random_grid_traj(rng, 6);
      REQUIRE(eval_spec(spec, z) == oracle::eval_spec(spec, z));
    }
  }
}

TEST_CASE("choice is commutative and achieve is monotone under extension") {
  std::mt19937_64 rng(12);
  for (int s = 0; s < 40; ++s) {
    Spec a = random_spec(rng, 3), b = random_spec(rng, 3);
    auto ach = Spec::achieve(random_predicate(rng));
    for (int t = 0; t < 50; ++t) {
      auto z = random_grid_traj(rng, 5);
      CHECK(eval_spec(Spec::choice(a, b), z) == eval_spec(Spec::choice(b, a), z));
      if (eval_spec(ach, z)) {
        auto longer = z;
        longer.actions.push_back({0, 0});
        longer.states.push_back(random_grid_traj(rng, 1).states[0]);
        CHECK(eval_spec(ach, longer));
      }
    }
  }
}

TEST_CASE("parser builds the expected trees") {
  RegionTable regions{{"g1", {0, 0}}, {"g2", {1, 1}}, {"goal", {2, 2}}, {"obs", {0, 0, 1, 1}}};
  auto s = parse_spec("achieve reach(g1, 0.3); achieve reach(goal, 0.3)", regions);
  CHECK(s.kind() == SpecKind::Seq);
  CHECK(s == Spec::seq(Spec::achieve(AtomicPredicate::reach_ball({0, 0}, 0.3)),
                       Spec::achieve(AtomicPredicate::reach_ball({2, 2}, 0.3))));
  CHECK(s.lhs().predicate().label == "g1");

  auto c = parse_spec(
      "(achieve reach(g1, 0.3) or achieve reach(g2, 0.3)); achieve reach(goal, 0.3) ensuring "
      "avoid(obs)",
      regions);
  REQUIRE(c.kind() == SpecKind::Ensuring);
  CHECK(c.predicate() == AtomicPredicate::avoid_rect(0, 0, 1, 1));
  REQUIRE(c.lhs().kind() == SpecKind::Seq);
  CHECK(c.lhs().lhs().kind() == SpecKind::Choice);
  CHECK(c.lhs().rhs().kind() == SpecKind::Achieve);
}

TEST_CASE("parser errors carry positions") {
  CHECK_THROWS_AS(parse_spec("achieve"), SyntaxError);
  CHECK_THROWS_AS(parse_spec("achieve reach(nowhere, 1)"), SyntaxError);
  CHECK_THROWS_AS(parse_spec("achieve reach(0, 0, 1) ;"), SyntaxError);
  try {
    parse_spec("achieve reach(0, 0, 1) or\n  ensuring");
    FAIL("expected a syntax error");
  } catch (const SyntaxError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("to_string round-trips through the parser") {
  std::mt19937_64 rng(13);
  for (int s = 0; s < 100; ++s) {
    Spec spec = random_spec(rng, 4);
    CHECK(parse_spec(to_string(spec)) == spec);
  }
}

TEST_CASE("trajectory validation and slicing") {
  Trajectory bad;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  auto z = make_traj({{0, 0}, {1, 0}, {2, 0}, {3, 0}});
  auto s = z.slice(1, 2);
  CHECK(s.states.size() == 2);
  CHECK(s.actions.size() == 1);
  CHECK(s.states[0] == Vec{1, 0});
}
