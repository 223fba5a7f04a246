#pragma once

#include <cstdint>
#include <string>

#include "dai/numerics.hpp"
#include "dai/rng.hpp"

namespace dai {

using Observation = Vector;
using Action = Vector;

enum class EnvId { pendulum_swingup, point_mass_2d };

std::string to_string(EnvId id);
EnvId env_id_from_string(const std::string& name);

struct EnvSpec {
  EnvId env_id = EnvId::pendulum_swingup;
  int obs_dim = 0;
  int action_dim = 0;
  Vector action_low;
  Vector action_high;
  int max_episode_steps = 200;
  double dt = 0.0;

  static EnvSpec make(EnvId id);
  Vector action_mid() const { return 0.5 * (action_low + action_high); }
  Vector action_half_range() const { return 0.5 * (action_high - action_low); }
  Action clip(const Action& a) const;
};

enum class DoneReason { none, time_limit };

struct EnvState {
  EnvId env_id = EnvId::pendulum_swingup;
  // pendulum: {theta, theta_dot}; point mass: {x, y, vx, vy, gx, gy}
  std::array<double, 6> physics{};
  int step_count = 0;
  Rng rng;

  bool operator==(const EnvState&) const = default;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  DoneReason done_reason = DoneReason::none;
};

/// Angle wrapped into (-pi, pi].
double wrap_angle(double theta);

std::pair<EnvState, Observation> env_reset(const EnvSpec& spec, std::uint64_t seed);
Observation observe(const EnvSpec& spec, const EnvState& state);
/// Advances `state` in place. The action is clipped to the bounds first.
StepResult env_step(const EnvSpec& spec, EnvState& state, const Action& action);

/// Hand-placed states for tests and closed-form rollouts.
EnvState pendulum_state(double theta, double theta_dot);
EnvState point_mass_state(double x, double y, double vx = 0.0, double vy = 0.0);

/// Two-dimensional projection used for visitation binning:
/// pendulum (wrap(theta), theta_dot), point mass (x, y).
std::array<double, 2> state_projection(const EnvState& state);

/// Analytic controller standing in for the reference expert.
Action scripted_expert_action(const EnvSpec& spec, const Observation& observation);

}  // namespace dai
