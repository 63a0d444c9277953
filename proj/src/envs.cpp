#include "genrl/envs.hpp"

#include <array>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace genrl {

std::string_view env_name(EnvId id) {
  switch (id) {
    case EnvId::Car2D: return "car2d";
    case EnvId::TwoLinkArm: return "two_link_arm";
    case EnvId::CartPole: return "cartpole";
    case EnvId::Pendulum: return "pendulum";
    case EnvId::Acrobot: return "acrobot";
  }
  return "?";
}

Environment make_car2d() {
  Environment e;
  e.id = EnvId::Car2D;
  e.state_dim = 2;
  e.action_dim = 2;
  e.action_lo = {-1.0, -1.0};
  e.action_hi = {1.0, 1.0};
  e.dt = 1.0;
  e.obs_scale = {0.2, 0.2};
  return e;
}

Environment make_two_link_arm(double l1, double l2) {
  if (!(l1 > 0.0) || !(l2 > 0.0)) throw InvalidInput("arm link lengths must be positive");
  Environment e;
  e.id = EnvId::TwoLinkArm;
  e.state_dim = 4;
  e.action_dim = 2;
  e.action_lo = {-0.3, -0.3};
  e.action_hi = {0.3, 0.3};
  e.params = {l1, l2};
  e.dt = 1.0;
  double r = 1.0 / (l1 + l2);
  e.obs_scale = {r, r, 1.0 / std::numbers::pi, 1.0 / std::numbers::pi};
  return e;
}

Environment make_cartpole(double half_length, double hold_goal, double hold_tolerance) {
  if (!(half_length > 0.0)) throw InvalidInput("pole length must be positive");
  if (!(hold_tolerance > 0.0)) throw InvalidInput("hold tolerance must be positive");
  Environment e;
  e.id = EnvId::CartPole;
  e.state_dim = 5;
  e.action_dim = 1;
  e.action_lo = {-1.0};
  e.action_hi = {1.0};
  e.params = {half_length};
  e.dt = 0.02;
  e.obs_scale = {0.5, 0.5, 2.0, 0.5, 0.0};
  e.hold_goal = hold_goal;
  e.hold_tolerance = hold_tolerance;
  return e;
}

Environment make_pendulum(double mass) {
  if (!(mass > 0.0)) throw InvalidInput("pendulum mass must be positive");
  Environment e;
  e.id = EnvId::Pendulum;
  e.state_dim = 2;
  e.action_dim = 1;
  e.action_lo = {-2.0};
  e.action_hi = {2.0};
  e.params = {mass};
  e.dt = 0.05;
  e.obs_scale = {1.0 / std::numbers::pi, 1.0 / 8.0};
  return e;
}

Environment make_acrobot(double link_mass) {
  if (!(link_mass > 0.0)) throw InvalidInput("acrobot mass must be positive");
  Environment e;
  e.id = EnvId::Acrobot;
  e.state_dim = 4;
  e.action_dim = 1;
  e.action_lo = {-1.0};
  e.action_hi = {1.0};
  e.params = {link_mass};
  e.dt = 0.2;
  e.obs_scale = {1.0 / std::numbers::pi, 1.0 / std::numbers::pi, 1.0 / (4 * std::numbers::pi),
                 1.0 / (9 * std::numbers::pi)};
  return e;
}

Environment shift_env_params(const Environment& env, std::span<const double> delta,
                             std::size_t times) {
  if (delta.empty()) return env;
  if (delta.size() != env.params.size())
    throw InvalidInput("environment parameter update has the wrong dimension");
  Environment out = env;
  for (std::size_t k = 0; k < times; ++k)
    for (std::size_t j = 0; j < delta.size(); ++j) out.params[j] += delta[j];
  for (double p : out.params)
    if (!(p > 0.0)) throw InvalidInput("environment parameters must stay positive");
  return out;
}

// ---------------------------------------------------------------------------

std::pair<double, double> arm_forward(double l1, double l2, double theta1, double theta2) {
  return {l1 * std::cos(theta1) + l2 * std::cos(theta1 + theta2),
          l1 * std::sin(theta1) + l2 * std::sin(theta1 + theta2)};
}

std::pair<double, double> arm_inverse(double l1, double l2, double x, double y) {
  double r = std::hypot(x, y);
  r = std::clamp(r, std::abs(l1 - l2), l1 + l2);
  double c2 = std::clamp((r * r - l1 * l1 - l2 * l2) / (2 * l1 * l2), -1.0, 1.0);
  double theta2 = std::acos(c2);
  double theta1 = std::atan2(y, x) - std::atan2(l2 * std::sin(theta2), l1 + l2 * std::cos(theta2));
  return {theta1, theta2};
}

namespace {

double wrap_angle(double a) {
  constexpr double pi = std::numbers::pi;
  double w = std::fmod(a + pi, 2 * pi);
  if (w <= 0.0) w += 2 * pi;
  return w - pi;
}

Vec cartpole_step(const Environment& env, std::span<const double> s, double a) {
  constexpr double g = 9.8, masscart = 1.0, masspole = 0.1, force_mag = 10.0;
  const double total_mass = masscart + masspole;
  const double length = env.params[0];
  const double polemass_length = masspole * length;
  const double tau = env.dt;
  double x = s[0], x_dot = s[1], theta = s[2], theta_dot = s[3];
  double force = a * force_mag;
  double cos_t = std::cos(theta), sin_t = std::sin(theta);
  double temp = (force + polemass_length * theta_dot * theta_dot * sin_t) / total_mass;
  double theta_acc = (g * sin_t - cos_t * temp) /
                     (length * (4.0 / 3.0 - masspole * cos_t * cos_t / total_mass));
  double x_acc = temp - polemass_length * theta_acc * cos_t / total_mass;
  x += tau * x_dot;
  x_dot += tau * x_acc;
  theta += tau * theta_dot;
  theta_dot += tau * theta_acc;
  double hold = std::abs(theta - env.hold_goal) < env.hold_tolerance ? s[4] + 1.0 : 0.0;
  return {x, x_dot, theta, theta_dot, hold};
}

Vec pendulum_step(const Environment& env, std::span<const double> s, double u) {
  constexpr double g = 10.0, l = 1.0, max_speed = 8.0;
  const double m = env.params[0];
  double th = s[0], thdot = s[1];
  double newthdot = thdot + (3 * g / (2 * l) * std::sin(th) + 3.0 / (m * l * l) * u) * env.dt;
  newthdot = std::clamp(newthdot, -max_speed, max_speed);
  double newth = th + newthdot * env.dt;
  return {wrap_angle(newth), newthdot};
}

using Acro = std::array<double, 4>;

Acro acrobot_dsdt(double m, double torque, const Acro& s) {
  constexpr double l1 = 1.0, lc1 = 0.5, lc2 = 0.5, I1 = 1.0, I2 = 1.0, g = 9.8;
  constexpr double pi = std::numbers::pi;
  const double m1 = m, m2 = m;
  double theta1 = s[0], theta2 = s[1], dtheta1 = s[2], dtheta2 = s[3];
  double d1 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2 * l1 * lc2 * std::cos(theta2)) + I1 + I2;
  double d2 = m2 * (lc2 * lc2 + l1 * lc2 * std::cos(theta2)) + I2;
  double phi2 = m2 * lc2 * g * std::cos(theta1 + theta2 - pi / 2.0);
  double phi1 = -m2 * l1 * lc2 * dtheta2 * dtheta2 * std::sin(theta2) -
                2 * m2 * l1 * lc2 * dtheta2 * dtheta1 * std::sin(theta2) +
                (m1 * lc1 + m2 * l1) * g * std::cos(theta1 - pi / 2) + phi2;
  double ddtheta2 = (torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1 * dtheta1 * std::sin(theta2) -
                     phi2) /
                    (m2 * lc2 * lc2 + I2 - d2 * d2 / d1);
  double ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
  return {dtheta1, dtheta2, ddtheta1, ddtheta2};
}

Vec acrobot_step(const Environment& env, std::span<const double> s, double torque) {
  constexpr double pi = std::numbers::pi;
  const double m = env.params[0], h = env.dt;
  Acro y{s[0], s[1], s[2], s[3]};
  auto axpy = [](const Acro& a, double c, const Acro& b) {
    Acro r;
    for (int k = 0; k < 4; ++k) r[k] = a[k] + c * b[k];
    return r;
  };
  Acro k1 = acrobot_dsdt(m, torque, y);
  Acro k2 = acrobot_dsdt(m, torque, axpy(y, h / 2, k1));
  Acro k3 = acrobot_dsdt(m, torque, axpy(y, h / 2, k2));
  Acro k4 = acrobot_dsdt(m, torque, axpy(y, h, k3));
  Acro n;
  for (int k = 0; k < 4; ++k) n[k] = y[k] + h / 6.0 * (k1[k] + 2 * k2[k] + 2 * k3[k] + k4[k]);
  return {wrap_angle(n[0]), wrap_angle(n[1]), std::clamp(n[2], -4 * pi, 4 * pi),
          std::clamp(n[3], -9 * pi, 9 * pi)};
}

}  // namespace

Vec env_step(const Environment& env, std::span<const double> s, std::span<const double> a) {
  if (s.size() != env.state_dim)
    throw InvalidInput("state dimension " + std::to_string(s.size()) + " does not match " +
                       std::string(env_name(env.id)));
  if (a.size() != env.action_dim) throw InvalidInput("action dimension mismatch");
  if (!all_finite(s) || !all_finite(a)) throw InvalidInput("non-finite state or action");
  Vec act(a.begin(), a.end());
  for (std::size_t k = 0; k < act.size(); ++k)
    act[k] = std::clamp(act[k], env.action_lo[k], env.action_hi[k]);
  switch (env.id) {
    case EnvId::Car2D:
      return {s[0] + act[0] * env.dt, s[1] + act[1] * env.dt};
    case EnvId::TwoLinkArm: {
      double t1 = s[2] + act[0], t2 = s[3] + act[1];
      auto [x, y] = arm_forward(env.params[0], env.params[1], t1, t2);
      return {x, y, t1, t2};
    }
    case EnvId::CartPole: return cartpole_step(env, s, act[0]);
    case EnvId::Pendulum: return pendulum_step(env, s, act[0]);
    case EnvId::Acrobot: return acrobot_step(env, s, act[0]);
  }
  throw ConsistencyError("unknown environment");
}

Vec env_reset(const Environment& env, std::span<const double> sample) {
  if (sample.size() == env.state_dim) return Vec(sample.begin(), sample.end());
  if (env.id == EnvId::TwoLinkArm && sample.size() == 2) {
    auto [t1, t2] = arm_inverse(env.params[0], env.params[1], sample[0], sample[1]);
    auto [x, y] = arm_forward(env.params[0], env.params[1], t1, t2);
    return {x, y, t1, t2};
  }
  if (env.id == EnvId::CartPole && sample.size() == 4)
    return {sample[0], sample[1], sample[2], sample[3], 0.0};
  throw InvalidInput("initial sample of dimension " + std::to_string(sample.size()) +
                     " does not fit " + std::string(env_name(env.id)));
}

Vec observe(const Environment& env, std::span<const double> s) {
  Vec o(s.begin(), s.end());
  for (std::size_t k = 0; k < o.size() && k < env.obs_scale.size(); ++k) o[k] *= env.obs_scale[k];
  return o;
}

// ---------------------------------------------------------------------------

InitDistribution InitDistribution::point(Vec p) {
  InitDistribution d;
  d.kind = Kind::Point;
  d.lo = std::move(p);
  d.validate();
  return d;
}

InitDistribution InitDistribution::uniform_box(Vec lo, Vec hi) {
  InitDistribution d;
  d.kind = Kind::UniformBox;
  d.lo = std::move(lo);
  d.hi = std::move(hi);
  d.validate();
  return d;
}

InitDistribution InitDistribution::empirical(std::vector<Vec> particles) {
  InitDistribution d;
  d.kind = Kind::Empirical;
  d.particles = std::move(particles);
  d.validate();
  return d;
}

std::size_t InitDistribution::dim() const {
  return kind == Kind::Empirical ? particles.front().size() : lo.size();
}

Vec InitDistribution::mean() const {
  switch (kind) {
    case Kind::Point: return lo;
    case Kind::UniformBox: {
      Vec m(lo.size());
      for (std::size_t k = 0; k < m.size(); ++k) m[k] = 0.5 * (lo[k] + hi[k]);
      return m;
    }
    case Kind::Empirical: {
      Vec m(particles.front().size(), 0.0);
      for (const auto& p : particles)
        for (std::size_t k = 0; k < m.size(); ++k) m[k] += p[k];
      for (auto& x : m) x /= static_cast<double>(particles.size());
      return m;
    }
  }
  return {};
}

void InitDistribution::validate() const {
  switch (kind) {
    case Kind::Point:
      if (lo.empty() || !all_finite(lo)) throw InvalidInput("point distribution needs a finite point");
      break;
    case Kind::UniformBox:
      if (lo.empty() || lo.size() != hi.size()) throw InvalidInput("box corners differ in dimension");
      for (std::size_t k = 0; k < lo.size(); ++k)
        if (!(lo[k] <= hi[k])) throw InvalidInput("box lower corner exceeds upper corner");
      break;
    case Kind::Empirical:
      if (particles.empty()) throw InvalidInput("empirical distribution has no particles");
      for (const auto& p : particles)
        if (p.size() != particles.front().size())
          throw InvalidInput("particles differ in dimension");
      break;
  }
}

Vec sample_init(const InitDistribution& d, Rng& rng) {
  switch (d.kind) {
    case InitDistribution::Kind::Point: return d.lo;
    case InitDistribution::Kind::UniformBox: {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      Vec s(d.lo.size());
      for (std::size_t k = 0; k < s.size(); ++k) s[k] = d.lo[k] + u(rng) * (d.hi[k] - d.lo[k]);
      return s;
    }
    case InitDistribution::Kind::Empirical: {
      std::uniform_int_distribution<std::size_t> pick(0, d.particles.size() - 1);
      return d.particles[pick(rng)];
    }
  }
  throw ConsistencyError("unknown distribution kind");
}

InitDistribution shift_init(const InitDistribution& d, std::span<const double> delta,
                            std::size_t times) {
  InitDistribution out = d;
  auto shift = [&](Vec& v) {
    if (delta.size() > v.size()) throw InvalidInput("init shift has too many components");
    for (std::size_t t = 0; t < times; ++t)
      for (std::size_t k = 0; k < delta.size(); ++k) v[k] += delta[k];
  };
  if (d.kind == InitDistribution::Kind::Empirical) {
    for (auto& p : out.particles) shift(p);
  } else {
    if (delta.size() != d.lo.size()) throw InvalidInput("init shift dimension mismatch");
    shift(out.lo);
    if (d.kind == InitDistribution::Kind::UniformBox) shift(out.hi);
  }
  return out;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, bool header) {
  std::size_t n = traj.states.empty() ? 0 : traj.states.front().size();
  std::size_t m = traj.actions.empty() ? 0 : traj.actions.front().size();
  if (header) {
    os << "step";
    for (std::size_t k = 0; k < n; ++k) os << ",s_" << k;
    for (std::size_t k = 0; k < m; ++k) os << ",a_" << k;
    os << '\n';
  }
  for (std::size_t t = 0; t < traj.states.size(); ++t) {
    os << t;
    for (double x : traj.states[t]) os << ',' << format_double(x);
    if (t < traj.actions.size()) {
      for (double x : traj.actions[t]) os << ',' << format_double(x);
    } else {
      for (std::size_t k = 0; k < m; ++k) os << ',';
    }
    os << '\n';
  }
}

}  // namespace genrl
