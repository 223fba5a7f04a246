#include "dai/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dai/error.hpp"

namespace dai {

namespace {

constexpr double kPi = std::numbers::pi;

constexpr double kPendulumGravity = 10.0;
constexpr double kPendulumMass = 1.0;
constexpr double kPendulumLength = 1.0;
constexpr double kPendulumMaxSpeed = 8.0;
constexpr double kPendulumMaxTorque = 2.0;

constexpr double kPointMassMaxForce = 1.0;
constexpr double kPointMassDamping = 0.95;
constexpr double kPointMassBound = 5.0;

double sign_nonneg(double x) { return x >= 0.0 ? 1.0 : -1.0; }

}  // namespace

std::string to_string(EnvId id) {
  switch (id) {
    case EnvId::pendulum_swingup: return "pendulum_swingup";
    case EnvId::point_mass_2d: return "point_mass_2d";
  }
  return "unknown";
}

EnvId env_id_from_string(const std::string& name) {
  if (name == "pendulum_swingup") return EnvId::pendulum_swingup;
  if (name == "point_mass_2d") return EnvId::point_mass_2d;
  throw ContractViolation("unknown environment '" + name + "'");
}

EnvSpec EnvSpec::make(EnvId id) {
  EnvSpec s;
  s.env_id = id;
  s.max_episode_steps = 200;
  if (id == EnvId::pendulum_swingup) {
    s.obs_dim = 3;
    s.action_dim = 1;
    s.action_low = Vector::Constant(1, -kPendulumMaxTorque);
    s.action_high = Vector::Constant(1, kPendulumMaxTorque);
    s.dt = 0.05;
  } else {
    s.obs_dim = 4;
    s.action_dim = 2;
    s.action_low = Vector::Constant(2, -kPointMassMaxForce);
    s.action_high = Vector::Constant(2, kPointMassMaxForce);
    s.dt = 0.1;
  }
  return s;
}

Action EnvSpec::clip(const Action& a) const {
  require(a.size() == action_dim, "action dimension " + std::to_string(a.size()) +
                                      " does not match environment action_dim " +
                                      std::to_string(action_dim));
  return a.cwiseMax(action_low).cwiseMin(action_high);
}

double wrap_angle(double theta) {
  double w = std::fmod(theta + kPi, 2.0 * kPi);
  if (w <= 0.0) w += 2.0 * kPi;
  return w - kPi;
}

EnvState pendulum_state(double theta, double theta_dot) {
  EnvState s;
  s.env_id = EnvId::pendulum_swingup;
  s.physics = {theta, theta_dot, 0, 0, 0, 0};
  return s;
}

EnvState point_mass_state(double x, double y, double vx, double vy) {
  EnvState s;
  s.env_id = EnvId::point_mass_2d;
  s.physics = {x, y, vx, vy, 0.0, 0.0};
  return s;
}

Observation observe(const EnvSpec& spec, const EnvState& state) {
  require(spec.env_id == state.env_id, "environment state does not belong to this spec");
  const auto& p = state.physics;
  Observation obs(spec.obs_dim);
  if (spec.env_id == EnvId::pendulum_swingup) {
    obs << std::cos(p[0]), std::sin(p[0]), p[1];
  } else {
    obs << p[0], p[1], p[2], p[3];
  }
  return obs;
}

std::pair<EnvState, Observation> env_reset(const EnvSpec& spec, std::uint64_t seed) {
  EnvState state;
  state.env_id = spec.env_id;
  state.rng = Rng::stream(seed, "env_reset");
  if (spec.env_id == EnvId::pendulum_swingup) {
    const double theta = state.rng.uniform(-kPi, kPi);
    const double theta_dot = state.rng.uniform(-1.0, 1.0);
    state.physics = {theta, theta_dot, 0, 0, 0, 0};
  } else {
    const double x = state.rng.uniform(-4.0, 4.0);
    const double y = state.rng.uniform(-4.0, 4.0);
    state.physics = {x, y, 0.0, 0.0, 0.0, 0.0};
  }
  Observation obs = observe(spec, state);
  return {std::move(state), std::move(obs)};
}

StepResult env_step(const EnvSpec& spec, EnvState& state, const Action& action) {
  require(spec.env_id == state.env_id, "environment state does not belong to this spec");
  require(state.step_count < spec.max_episode_steps, "env_step called on a finished episode");
  require(action.size() == spec.action_dim, "action dimension mismatch");
  require(action.allFinite(), "env_step: non-finite action");
  const Action u = spec.clip(action);
  auto& p = state.physics;
  StepResult out;

  if (spec.env_id == EnvId::pendulum_swingup) {
    const double g = kPendulumGravity, m = kPendulumMass, l = kPendulumLength, dt = spec.dt;
    const double theta = p[0], theta_dot = p[1], torque = u(0);
    const double wrapped = wrap_angle(theta);
    out.reward = -(wrapped * wrapped + 0.1 * theta_dot * theta_dot + 0.001 * torque * torque);
    double new_dot = theta_dot + dt * (3.0 * g / (2.0 * l) * std::sin(theta) + 3.0 / (m * l * l) * torque);
    new_dot = std::clamp(new_dot, -kPendulumMaxSpeed, kPendulumMaxSpeed);
    p[0] = theta + dt * new_dot;
    p[1] = new_dot;
  } else {
    const double dt = spec.dt;
    const double dx = p[0] - p[4], dy = p[1] - p[5];
    out.reward = -std::sqrt(dx * dx + dy * dy) - 0.01 * u.squaredNorm();
    for (int k = 0; k < 2; ++k) {
      const double v = kPointMassDamping * p[2 + k] + dt * u(k);
      p[k] = std::clamp(p[k] + dt * v, -kPointMassBound, kPointMassBound);
      p[2 + k] = v;
    }
  }

  state.step_count += 1;
  out.observation = observe(spec, state);
  out.done = state.step_count >= spec.max_episode_steps;
  out.done_reason = out.done ? DoneReason::time_limit : DoneReason::none;
  return out;
}

std::array<double, 2> state_projection(const EnvState& state) {
  const auto& p = state.physics;
  if (state.env_id == EnvId::pendulum_swingup) return {wrap_angle(p[0]), p[1]};
  return {p[0], p[1]};
}

Action scripted_expert_action(const EnvSpec& spec, const Observation& observation) {
  require(observation.size() == spec.obs_dim, "expert: observation dimension mismatch");
  Action u(spec.action_dim);
  if (spec.env_id == EnvId::pendulum_swingup) {
    const double cos_t = observation(0), sin_t = observation(1), theta_dot = observation(2);
    const double wrapped = std::atan2(sin_t, cos_t);
    if (std::cos(wrapped) > 0.95 && std::abs(theta_dot) < 1.0) {
      u(0) = -16.0 * wrapped - 2.0 * theta_dot;
    } else {
      // Energy pumping with theta = 0 upright: E = 1/2 w^2 + (g/l) cos(theta).
      const double energy = 0.5 * theta_dot * theta_dot + 10.0 * std::cos(wrapped);
      constexpr double kTargetEnergy = 10.0;
      u(0) = 2.0 * sign_nonneg(theta_dot) * sign_nonneg(kTargetEnergy - energy);
    }
  } else {
    u(0) = -0.8 * observation(0) - 0.5 * observation(2);
    u(1) = -0.8 * observation(1) - 0.5 * observation(3);
  }
  return spec.clip(u);
}

}  // namespace dai
