#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "genrl/common.hpp"
#include "genrl/spec_lang.hpp"

namespace genrl {

enum class EnvId { Car2D, TwoLinkArm, CartPole, Pendulum, Acrobot };

std::string_view env_name(EnvId id);

/// Deterministic dynamics plus the metadata a policy needs.
///
/// State layouts:
///   Car2D       (x, y)
///   TwoLinkArm  (x, y, theta1, theta2), (x, y) is the end effector
///   CartPole    (x, x_dot, theta, theta_dot, hold_counter)
///   Pendulum    (theta, theta_dot), theta = 0 is upright
///   Acrobot     (theta1, theta2, omega1, omega2), theta1 = 0 hangs down
///
/// Parameters: arm (l1, l2); cart-pole (pole half-length); pendulum (mass);
/// acrobot (link mass).
struct Environment {
  EnvId id = EnvId::Car2D;
  std::size_t state_dim = 2;
  std::size_t action_dim = 2;
  Vec action_lo, action_hi;
  Vec params;
  double dt = 1.0;
  /// Elementwise observation scaling applied before the policy sees a state.
  Vec obs_scale;
  /// Cart-pole hold counter: counts consecutive steps with |theta - goal| < tol.
  double hold_goal = 0.0;
  double hold_tolerance = 0.2;
};

Environment make_car2d();
Environment make_two_link_arm(double l1, double l2);
Environment make_cartpole(double half_length = 0.5, double hold_goal = 0.0,
                          double hold_tolerance = 0.2);
Environment make_pendulum(double mass = 1.0);
Environment make_acrobot(double link_mass = 1.0);

/// Adds `times` copies of delta to the environment parameters.
Environment shift_env_params(const Environment& env, std::span<const double> delta,
                             std::size_t times);

/// One step. The action is clamped to the bounds. Throws InvalidInput on a
/// non-finite state or action or a dimension mismatch.
Vec env_step(const Environment& env, std::span<const double> s, std::span<const double> a);

/// Completes a sampled initial point into a full state: the arm gets joint
/// angles from inverse kinematics (elbow angle >= 0), the cart-pole gets a zero
/// hold counter. Full-dimension states pass through unchanged.
Vec env_reset(const Environment& env, std::span<const double> sample);

Vec observe(const Environment& env, std::span<const double> s);

/// Planar two-link forward kinematics.
std::pair<double, double> arm_forward(double l1, double l2, double theta1, double theta2);
/// Inverse kinematics with the elbow angle in [0, pi]; the radius is clamped
/// into the reachable annulus.
std::pair<double, double> arm_inverse(double l1, double l2, double x, double y);

// ---------------------------------------------------------------------------

struct InitDistribution {
  enum class Kind { Point, UniformBox, Empirical };
  Kind kind = Kind::Point;
  /// Point: the point. UniformBox: lower corner.
  Vec lo;
  /// UniformBox: upper corner.
  Vec hi;
  std::vector<Vec> particles;

  static InitDistribution point(Vec p);
  static InitDistribution uniform_box(Vec lo, Vec hi);
  static InitDistribution empirical(std::vector<Vec> particles);

  std::size_t dim() const;
  /// Mean of the distribution (box center, particle average).
  Vec mean() const;
  void validate() const;
};

Vec sample_init(const InitDistribution& d, Rng& rng);
inline Vec sample_init(const InitDistribution& d, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return sample_init(d, rng);
}

/// Translates the distribution by delta. Empirical particles have their
/// leading delta.size() components shifted.
InitDistribution shift_init(const InitDistribution& d, std::span<const double> delta,
                            std::size_t times = 1);

/// Writes `step,s_0..s_{n-1},a_0..a_{m-1}`; the final row has empty actions.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, bool header = true);

}  // namespace genrl
