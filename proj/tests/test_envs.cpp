#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <doctest.h>

#include "genrl/envs.hpp"

using namespace genrl;

constexpr double kPi = std::numbers::pi;

TEST_CASE("car2d translates by the clamped action") {
  auto car = make_car2d();
  CHECK(env_step(car, Vec{0, 0}, Vec{1, 0}) == Vec{1, 0});
  CHECK(env_step(car, Vec{0, 0}, Vec{3, -2}) == Vec{1, -1});
  CHECK_THROWS_AS(env_step(car, Vec{0, 0, 0}, Vec{1, 0}), InvalidInput);
  CHECK_THROWS_AS(env_step(car, Vec{0, NAN}, Vec{1, 0}), InvalidInput);
}

TEST_CASE("car2d steps compose when unclamped") {
  auto car = make_car2d();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-0.5, 0.5);
  for (int t = 0; t < 100; ++t) {
    // dyadic values keep the additions exact
    Vec s{std::ldexp(std::round(U(rng) * 64), -4), 1.25};
    Vec a{std::ldexp(std::round(U(rng) * 8), -4), 0.25}, b{0.125, std::ldexp(std::round(U(rng) * 8), -4)};
    Vec ab{a[0] + b[0], a[1] + b[1]};
    CHECK(env_step(car, env_step(car, s, a), b) == env_step(car, s, ab));
  }
}

TEST_CASE("arm forward kinematics") {
  auto [x0, y0] = arm_forward(10, 10, 0, 0);
  CHECK(std::abs(x0 - 20) <= 1e-9);
  CHECK(std::abs(y0) <= 1e-9);
  auto [x1, y1] = arm_forward(10, 10, kPi / 2, -kPi / 2);
  CHECK(std::abs(x1 - 10) <= 1e-9);
  CHECK(std::abs(y1 - 10) <= 1e-9);
  auto [x2, y2] = arm_forward(5, 3, kPi / 2, -kPi / 2);
  CHECK(std::abs(x2 - 3) <= 1e-9);
  CHECK(std::abs(y2 - 5) <= 1e-9);

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> A(-4, 4);
  for (int t = 0; t < 1000; ++t) {
    auto [x, y] = arm_forward(10, 7, A(rng), A(rng));
    CHECK(std::hypot(x, y) <= 17 + 1e-12);
  }
}

TEST_CASE("arm inverse kinematics round-trips inside the annulus") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> R(3.5, 16.5), T(-kPi, kPi);
  for (int t = 0; t < 500; ++t) {
    double r = R(rng), a = T(rng);
    double x = r * std::cos(a), y = r * std::sin(a);
    auto [t1, t2] = arm_inverse(10, 7, x, y);
    CHECK(t2 >= 0.0);
    auto [fx, fy] = arm_forward(10, 7, t1, t2);
    CHECK(std::abs(fx - x) < 1e-9);
    CHECK(std::abs(fy - y) < 1e-9);
  }
}

TEST_CASE("arm step moves joints by bounded increments") {
  auto arm = make_two_link_arm(10, 10);
  auto s0 = env_reset(arm, Vec{20, 0});
  CHECK(s0.size() == 4);
  auto s1 = env_step(arm, s0, Vec{1, -1});
  CHECK(std::abs(s1[2] - s0[2] - 0.3) < 1e-12);
  CHECK(std::abs(s1[3] - s0[3] + 0.3) < 1e-12);
  auto [x, y] = arm_forward(10, 10, s1[2], s1[3]);
  CHECK(s1[0] == x);
  CHECK(s1[1] == y);
}

TEST_CASE("env_step is a pure function") {
  std::vector<std::pair<Environment, Vec>> cases{
      {make_car2d(), {0.3, -0.2}},
      {make_two_link_arm(10, 10), {10, 10, kPi / 2, -kPi / 2}},
      {make_cartpole(0.5), {0, 0, 0.05, 0, 0}},
      {make_pendulum(1.0), {kPi - 0.3, 0}},
      {make_acrobot(1.0), {0.1, 0.2, 0, 0}},
  };
  for (const auto& [env, s] : cases) {
    Vec a(env.action_dim, 0.37);
    CHECK(env_step(env, s, a) == env_step(env, s, a));
  }
}

TEST_CASE("classic control equilibria and counters") {
  auto pend = make_pendulum(1.0);
  Vec s{kPi, 0};
  for (int k = 0; k < 200; ++k) s = env_step(pend, s, Vec{0});
  CHECK(std::abs(std::remainder(s[0] - kPi, 2 * kPi)) < 1e-9);
  CHECK(std::abs(s[1]) < 1e-9);

  auto acro = make_acrobot(1.0);
  Vec q{0, 0, 0, 0};
  for (int k = 0; k < 100; ++k) q = env_step(acro, q, Vec{0});
  for (double v : q) CHECK(std::abs(v) < 1e-9);

  auto cp = make_cartpole(0.5);
  Vec c{0, 0, 0, 0, 0};
  for (int k = 0; k < 5; ++k) c = env_step(cp, c, Vec{0});
  CHECK(c[2] == 0.0);
  CHECK(c[4] == 5.0);
  // a tilted pole falls further and the counter resets once outside tolerance
  Vec f{0, 0, 0.15, 0, 3};
  for (int k = 0; k < 50; ++k) f = env_step(cp, f, Vec{0});
  CHECK(f[2] > 0.2);
  CHECK(f[4] == 0.0);
}

TEST_CASE("environment parameters shift additively") {
  auto cp = make_cartpole(0.5);
  auto longer = shift_env_params(cp, Vec{0.25}, 2);
  CHECK(longer.params[0] == 1.0);
  CHECK_THROWS_AS(shift_env_params(cp, Vec{-1.0}, 1), InvalidInput);
  CHECK_THROWS_AS(shift_env_params(cp, Vec{1.0, 1.0}, 1), InvalidInput);
}

TEST_CASE("init distributions sample and shift") {
  Rng rng = make_rng(1);
  CHECK(sample_init(InitDistribution::point({2, 0}), rng) == Vec{2, 0});
  CHECK(sample_init(InitDistribution::empirical({{1, 1}}), rng) == Vec{1, 1});
  auto box = InitDistribution::uniform_box({0, 0}, {1, 0});
  double sum = 0;
  for (int k = 0; k < 10000; ++k) {
    auto s = sample_init(box, rng);
    CHECK(s[1] == 0.0);
    sum += s[0];
  }
  CHECK(std::abs(sum / 10000 - 0.5) < 0.02);

  auto p = shift_init(InitDistribution::point({0, 0}), Vec{0.5, 0});
  CHECK(p.lo == Vec{0.5, 0});
  auto same = shift_init(box, Vec{0, 0});
  CHECK(same.lo == box.lo);
  CHECK(same.hi == box.hi);
  auto e = shift_init(InitDistribution::empirical({{1, 1, 7}, {2, 3, 7}}), Vec{1, -1}, 2);
  CHECK(e.particles[0] == Vec{3, -1, 7});
  CHECK(e.particles[1] == Vec{4, 1, 7});
  CHECK(box.mean() == Vec{0.5, 0});
  CHECK_THROWS_AS(InitDistribution::uniform_box({1}, {0}), InvalidInput);
  CHECK_THROWS_AS(InitDistribution::empirical({}), InvalidInput);
}

TEST_CASE("trajectory csv layout") {
  Trajectory z;
  z.states = {{0, 0}, {1, 0}};
  z.actions = {{1, 0}};
  std::ostringstream os;
  write_trajectory_csv(os, z);
  CHECK(os.str() == "step,s_0,s_1,a_0,a_1\n0,0,0,1,0\n1,1,0,,\n");
}
