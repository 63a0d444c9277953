#include "genrl/tasks.hpp"

#include <functional>
#include <map>
#include <numbers>

namespace genrl {

void InductiveTask::validate() const {
  if (horizon && *horizon < 1) throw InvalidInput("horizon must be at least 1");
  base.init.validate();
  for (const auto& p : collect_predicates(base.spec))
    if (p.required_state_dim() > base.env.state_dim)
      throw InvalidInput("predicate " + to_string(p) + " reads beyond the state of " +
                         std::string(env_name(base.env.id)));
  for (const auto& p : collect_predicates(base.spec)) {
    auto it = update_pred.find(p.label);
    if (!p.label.empty() && it != update_pred.end() && it->second.size() != p.positional_dim())
      throw InvalidInput("update for '" + p.label + "' has the wrong dimension");
  }
  if (!update_env.empty() && update_env.size() != base.env.params.size())
    throw InvalidInput("environment update has the wrong dimension");
}

RLTask instantiate_task(const InductiveTask& task, std::size_t i) {
  if (task.horizon && i >= *task.horizon)
    throw InvalidInput("instance " + std::to_string(i) + " is beyond the horizon " +
                       std::to_string(*task.horizon));
  Spec spec = map_predicates(task.base.spec, [&](const AtomicPredicate& p) {
    return apply_update(p, task.update_pred, i);
  });
  InitDistribution init =
      task.update_init.empty() ? task.base.init : shift_init(task.base.init, task.update_init, i);
  Environment env = shift_env_params(task.base.env, task.update_env, i);
  return RLTask{std::move(spec), std::move(init), std::move(env)};
}

bool task_satisfied(const RLTask& task, const Trajectory& traj) {
  return eval_spec(task.spec, traj);
}

// ---------------------------------------------------------------------------

namespace {

std::string num(double x) { return format_double(x); }

std::vector<std::size_t> range(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t k = 0; k < n; ++k) v[k] = k;
  return v;
}

InitDistribution box_around(double x, double y, double half) {
  return InitDistribution::uniform_box({x - half, y - half}, {x + half, y + half});
}

Vec rect(double x0, double y0, double w, double h) { return {x0, y0, x0 + w, y0 + h}; }

InitDistribution inside(const Vec& r, double margin) {
  double mx = margin * (r[2] - r[0]), my = margin * (r[3] - r[1]);
  return InitDistribution::uniform_box({r[0] + mx, r[1] + my}, {r[2] - mx, r[3] - my});
}

Benchmark finish(Benchmark b, const RegionTable& regions) {
  b.task.base.spec = parse_spec(b.spec_text, regions);
  b.task.validate();
  return b;
}

Benchmark car_benchmark(std::string id, std::string description, std::string spec_text,
                        RegionTable regions, InitDistribution init, PredicateUpdate update_pred,
                        Vec update_init, std::size_t n_train) {
  Benchmark b{std::move(id), std::move(description), std::move(spec_text),
              InductiveTask{RLTask{Spec::achieve(AtomicPredicate::reach_ball({0, 0}, 1)),
                                   std::move(init), make_car2d()},
                            std::move(update_pred), std::move(update_init), {}, std::nullopt},
              range(n_train)};
  return finish(std::move(b), regions);
}

// 1-reach family. Goal ball radius r, obstacle across the straight line from
// the base initial box to the goal.
Benchmark reach_variant(const std::string& id, bool move_init, bool move_goal, bool obstacle,
                        double r) {
  RegionTable regions{{"g1", {3, 5}}, {"obs", {1, 2, 2, 3}}};
  if (move_goal && !move_init) regions["g1"] = {0, 5};
  std::string spec = "achieve reach(g1, " + num(r) + ")";
  if (obstacle) spec += " ensuring avoid(obs)";
  PredicateUpdate up;
  if (move_goal) up["g1"] = {0.5, 0};
  Vec init_up;
  if (move_init) init_up = {0.5, 0};
  std::string what = move_init && move_goal ? "moving initial distribution and goal"
                     : move_init            ? "moving initial distribution, stationary goal"
                                            : "moving goal";
  if (obstacle) what += ", with obstacle";
  return car_benchmark(id, "Car2D 1-reach: " + what, spec, regions, box_around(0, 0, 0.2), up,
                       init_up, 10);
}

Benchmark nreach(std::size_t n, bool obstacle, double r) {
  RegionTable regions{{"obs", {-0.5, 1.2, 0.5, 1.8}}};
  std::string spec;
  for (std::size_t k = 1; k <= n; ++k) {
    std::string name = "g" + std::to_string(k);
    regions[name] = {2.0 * static_cast<double>((k + 1) % 2), 3.0 * static_cast<double>(k)};
    if (k > 1) spec += "; ";
    spec += "achieve reach(" + name + ", " + num(r) + ")";
  }
  if (obstacle) spec += " ensuring avoid(obs)";
  std::string id = (obstacle ? "nreach_obs_" : "nreach_") + std::to_string(n);
  return car_benchmark(id,
                       "Car2D " + std::to_string(n) + "-reach through alternating waypoints" +
                           (obstacle ? ", with obstacle" : ""),
                       spec, regions, box_around(0, 0, 0.2), {}, {0.5, 0}, 10);
}

Benchmark choice_variant(const std::string& id, bool moving_goal, bool two_level, double r) {
  // The wall is 1 unit wide so a single clamped step cannot jump it. Instance i
  // starts at x = 1.5 i: instances 0-4 start left of the wall, 5 onwards right.
  RegionTable regions{{"g1", {3, 4}},
                      {"g2", {10.5, 4}},
                      {"goal", {moving_goal ? 0.0 : 6.75, 10.5}},
                      {"obs", {6.25, -20, 7.25, 9}}};
  std::string rs = num(r);
  std::string spec = "(achieve reach(g1, " + rs + ") or achieve reach(g2, " + rs +
                     ")); achieve reach(goal, " + rs + ")";
  PredicateUpdate up;
  if (moving_goal) up["goal"] = {1.5, 0};
  if (two_level) {
    regions["g3"] = {3, 16};
    regions["g4"] = {10.5, 16};
    regions["goal2"] = {0, 22};
    regions["obs2"] = {6.25, 12.5, 7.25, 18.5};
    up["goal2"] = {1.5, 0};
    spec += "; (achieve reach(g3, " + rs + ") or achieve reach(g4, " + rs +
            ")); achieve reach(goal2, " + rs + ") ensuring avoid(obs) ensuring avoid(obs2)";
  } else {
    spec += " ensuring avoid(obs)";
  }
  std::string what = two_level    ? "two stacked choices with moving goals"
                     : moving_goal ? "choice with a goal above the start"
                                   : "choice between two waypoints around a wall";
  return car_benchmark(id, "Car2D " + what, spec, regions, box_around(0, 0, 0.15), up, {1.5, 0}, 6);
}

struct TowerLayout {
  double link;
  double block_w, block_h;
  double source_x, target_x;
  bool drop_box;     // target is a fixed box; otherwise a growing stack
  bool horizontal;   // target stack grows leftwards along x
};

// Instance j moves the j-th block: visit the target slot for block j, then the
// next source block. The arm starts at the slot vacated by the previous block.
Benchmark destack(const std::string& id, const std::string& description, const TowerLayout& t,
                  std::size_t h) {
  auto slot = [&](double x, std::size_t k) {
    return rect(x, t.block_h * static_cast<double>(k), t.block_w, t.block_h);
  };
  RegionTable regions;
  regions["source"] = slot(t.source_x, h - 1);
  regions["target"] = slot(t.target_x, 0);
  Vec init_rect = t.drop_box ? regions["target"] : slot(t.source_x, h);
  std::string spec = t.drop_box ? "achieve inrect(source); achieve inrect(target)"
                                : "achieve inrect(target); achieve inrect(source)";
  PredicateUpdate up{{"source", {0, -t.block_h}}};
  if (!t.drop_box) up["target"] = t.horizontal ? Vec{-t.block_w, 0} : Vec{0, t.block_h};
  Vec init_up = t.drop_box ? Vec{} : Vec{0, -t.block_h};
  Benchmark b{id, description, spec,
              InductiveTask{RLTask{Spec::achieve(AtomicPredicate::reach_ball({0, 0}, 1)),
                                   inside(init_rect, 0.2), make_two_link_arm(t.link, t.link)},
                            up, init_up, {}, h},
              range(std::min<std::size_t>(4, h))};
  return finish(std::move(b), regions);
}

Benchmark classic(const std::string& id, const std::string& description, std::string spec_text,
                  InitDistribution init, Environment env, Vec update_env) {
  Benchmark b{id, description, std::move(spec_text),
              InductiveTask{RLTask{Spec::achieve(AtomicPredicate::reach_ball({0}, 1)),
                                   std::move(init), std::move(env)},
                            {}, {}, std::move(update_env), std::nullopt},
              range(5)};
  b.train_steps = 100;
  b.test_steps = 200;
  return finish(std::move(b), {});
}

using Factory = std::function<Benchmark(const BenchmarkOptions&)>;

const std::vector<std::pair<std::string, Factory>>& catalog() {
  static const std::vector<std::pair<std::string, Factory>> entries = [] {
    std::vector<std::pair<std::string, Factory>> e;
    auto radius = [](const BenchmarkOptions& o) { return o.reach_radius.value_or(0.3); };
    auto height = [](const BenchmarkOptions& o) { return o.horizon.value_or(8); };
    struct R { const char* id; bool init, goal, obs; };
    for (R r : {R{"reach_moving_init", true, false, false}, R{"reach_moving_init_obs", true, false, true},
                R{"reach_moving_goal", false, true, false}, R{"reach_moving_goal_obs", false, true, true},
                R{"reach_moving_both", true, true, false}, R{"reach_moving_both_obs", true, true, true}})
      e.emplace_back(r.id, [=](const BenchmarkOptions& o) {
        return reach_variant(r.id, r.init, r.goal, r.obs, radius(o));
      });
    for (bool obs : {false, true})
      for (std::size_t n = 1; n <= 5; ++n)
        e.emplace_back((obs ? "nreach_obs_" : "nreach_") + std::to_string(n),
                       [=](const BenchmarkOptions& o) { return nreach(n, obs, radius(o)); });
    e.emplace_back("choice", [=](const BenchmarkOptions& o) {
      return choice_variant("choice", false, false, radius(o));
    });
    e.emplace_back("choice_moving_goal", [=](const BenchmarkOptions& o) {
      return choice_variant("choice_moving_goal", true, false, radius(o));
    });
    e.emplace_back("choice_two_level", [=](const BenchmarkOptions& o) {
      return choice_variant("choice_two_level", true, true, radius(o));
    });
    e.emplace_back("destack_drop_same_side", [=](const BenchmarkOptions& o) {
      return destack("destack_drop_same_side", "arm: pick from a tower, drop in a box on the same side",
                     TowerLayout{10, 2, 1.5, 6, 12, true, false}, height(o));
    });
    e.emplace_back("destack_drop_opposite_side", [=](const BenchmarkOptions& o) {
      return destack("destack_drop_opposite_side",
                     "arm: pick from a tower, drop in a box on the opposite side",
                     TowerLayout{5, 1, 0.75, 3, -7, true, false}, height(o));
    });
    e.emplace_back("destack_same_side", [=](const BenchmarkOptions& o) {
      return destack("destack_same_side", "arm: move a tower onto a stack on the same side",
                     TowerLayout{10, 2, 1.5, 6, 12, false, false}, height(o));
    });
    e.emplace_back("destack_vertical_opposite_side", [=](const BenchmarkOptions& o) {
      return destack("destack_vertical_opposite_side",
                     "arm: move a tower onto a stack on the opposite side",
                     TowerLayout{10, 2, 1.5, 6, -8, false, false}, height(o));
    });
    e.emplace_back("destack_horizontal_same_side", [=](const BenchmarkOptions& o) {
      return destack("destack_horizontal_same_side",
                     "arm: move a tower into a horizontal row on the same side",
                     TowerLayout{10, 2, 1.5, 12, 8, false, true}, height(o));
    });
    e.emplace_back("cartpole", [](const BenchmarkOptions&) {
      return classic("cartpole", "cart-pole: hold the pole upright, pole length grows",
                     "achieve holdpole(0, 0.2, 50)",
                     InitDistribution::uniform_box({-0.05, -0.05, -0.05, -0.05},
                                                   {0.05, 0.05, 0.05, 0.05}),
                     make_cartpole(0.4, 0.0, 0.2), {0.4});
    });
    e.emplace_back("pendulum", [](const BenchmarkOptions&) {
      return classic("pendulum", "pendulum: swing up, mass grows", "achieve reachtheta(0, 0.1)",
                     InitDistribution::uniform_box({-std::numbers::pi, -1.0}, {std::numbers::pi, 1.0}),
                     make_pendulum(1.0), {0.1});
    });
    e.emplace_back("acrobot", [](const BenchmarkOptions&) {
      return classic("acrobot", "acrobot: raise the tip, link mass grows", "achieve reachtip(1)",
                     InitDistribution::uniform_box({-0.1, -0.1, -0.1, -0.1}, {0.1, 0.1, 0.1, 0.1}),
                     make_acrobot(0.2), {0.1});
    });
    return e;
  }();
  return entries;
}

}  // namespace

const std::vector<std::string>& benchmark_ids() {
  static const std::vector<std::string> ids = [] {
    std::vector<std::string> v;
    for (const auto& [id, f] : catalog()) v.push_back(id);
    return v;
  }();
  return ids;
}

Benchmark make_benchmark(std::string_view id, const BenchmarkOptions& options) {
  for (const auto& [name, factory] : catalog())
    if (name == id) return factory(options);
  throw InvalidInput("unknown benchmark '" + std::string(id) + "'");
}

}  // namespace genrl
