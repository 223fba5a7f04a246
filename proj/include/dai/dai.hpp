#pragma once

#include <cstdint>
#include <string>

#include "dai/agents.hpp"
#include "dai/envs.hpp"
#include "dai/rng.hpp"

namespace dai {

enum class ScheduleShape { linear, cosine, exponential, constant };

std::string to_string(ScheduleShape shape);
ScheduleShape schedule_shape_from_string(const std::string& name);

/// alpha(t) = phi(t / t_change). alpha = 0 executes the expert, alpha = 1 the
/// learner.
struct ScheduleSpec {
  ScheduleShape shape = ScheduleShape::linear;
  std::int64_t t_change = 1;
  double constant_value = 1.0;  // constant shape only

  static ScheduleSpec linear(std::int64_t t_change) { return {ScheduleShape::linear, t_change, 1.0}; }
  static ScheduleSpec constant(double value) { return {ScheduleShape::constant, 1, value}; }
  void validate() const;
  bool operator==(const ScheduleSpec&) const = default;
};

/// Weight on the learner's action at environment step t.
///
///   linear       min(max(t / t_change, 0), 1)
///   cosine       (1 - cos(pi * min(t / t_change, 1))) / 2
///   exponential  1 - exp(-3 t / t_change), reaches ~0.95 at t_change and
///                never exactly 1
///   constant     constant_value
///
/// t_change = 0 is a degenerate schedule with alpha = 1 for every t (except
/// for the constant shape, which ignores t_change).
double alpha_of(const ScheduleSpec& schedule, std::int64_t t);

/// (1 - alpha) * expert + alpha * learner. The endpoints return the
/// corresponding input unchanged, bit for bit.
Action interpolate(const Action& expert, const Action& learner, double alpha);

struct InterpolationRecord {
  std::int64_t step = 0;
  double alpha = 0.0;
  Action expert_action;
  Action rl_action;
  Action mixed_action;  // before exploration noise
};

struct DaiAction {
  Action executed;
  InterpolationRecord record;
};

/// One action choice of the interpolating controller: mix the expert with the
/// noiseless actor, then add exploration noise (if requested) and clip.
DaiAction dai_act(const ExpertPolicy& expert, const TD3Agent& agent, const ScheduleSpec& schedule,
                  const Observation& observation, std::int64_t t, Rng& rng, bool explore);

}  // namespace dai
