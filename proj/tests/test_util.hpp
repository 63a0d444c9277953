#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include "genrl/policy.hpp"
#include "genrl/spec_lang.hpp"

namespace genrl {

inline Trajectory make_traj(const std::vector<Vec>& states) {
  Trajectory z;
  z.states = states;
  for (std::size_t k = 1; k < states.size(); ++k) z.actions.push_back(Vec(states[0].size(), 0.0));
  return z;
}

/// Trajectory of 1..max_len states on the integer grid {0,1,2}^2.
inline Trajectory random_grid_traj(std::mt19937_64& rng, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::uniform_int_distribution<int> c(0, 2);
  std::vector<Vec> states(len(rng));
  for (auto& s : states) s = {double(c(rng)), double(c(rng))};
  return make_traj(states);
}

/// Predicates over the same grid, chosen so their truth values vary.
inline AtomicPredicate random_predicate(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> c(0, 2), kind(0, 2);
  double x = c(rng), y = c(rng);
  switch (kind(rng)) {
    case 0: return AtomicPredicate::reach_ball({x, y}, 1.2);
    case 1: return AtomicPredicate::in_rect(x - 0.5, y - 0.5, x + 0.5, y + 1.5);
    default: return AtomicPredicate::avoid_rect(x - 0.5, y - 0.5, x + 0.5, y + 0.5);
  }
}

inline Spec random_spec(std::mt19937_64& rng, std::size_t depth) {
  std::uniform_int_distribution<int> op(0, 3);
  int k = depth <= 1 ? 0 : op(rng);
  switch (k) {
    case 0: return Spec::achieve(random_predicate(rng));
    case 1: return Spec::ensuring(random_spec(rng, depth - 1), random_predicate(rng));
    case 2: return Spec::seq(random_spec(rng, depth - 1), random_spec(rng, depth - 1));
    default: return Spec::choice(random_spec(rng, depth - 1), random_spec(rng, depth - 1));
  }
}

/// Zero network whose output pre-activations are the given biases, so the
/// action is constant.
inline PolicyParams constant_policy(const PolicyShape& shape, const Vec& pre) {
  PolicyParams p{Vec(shape.param_count(), 0.0)};
  std::copy(pre.begin(), pre.end(), p.flat.end() - static_cast<std::ptrdiff_t>(pre.size()));
  return p;
}

}  // namespace genrl
