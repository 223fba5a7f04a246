#include "dai/dai.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dai/error.hpp"

namespace dai {

std::string to_string(ScheduleShape shape) {
  switch (shape) {
    case ScheduleShape::linear: return "linear";
    case ScheduleShape::cosine: return "cosine";
    case ScheduleShape::exponential: return "exponential";
    case ScheduleShape::constant: return "constant";
  }
  return "unknown";
}

ScheduleShape schedule_shape_from_string(const std::string& name) {
  if (name == "linear") return ScheduleShape::linear;
  if (name == "cosine") return ScheduleShape::cosine;
  if (name == "exponential") return ScheduleShape::exponential;
  if (name == "constant") return ScheduleShape::constant;
  throw ContractViolation("unknown schedule shape '" + name + "'");
}

void ScheduleSpec::validate() const {
  require(t_change >= 0, "schedule t_change must be non-negative");
  require(constant_value >= 0.0 && constant_value <= 1.0, "schedule constant_value must lie in [0, 1]");
}

double alpha_of(const ScheduleSpec& schedule, std::int64_t t) {
  require(t >= 0, "alpha_of: step must be non-negative");
  if (schedule.shape == ScheduleShape::constant) return schedule.constant_value;
  if (schedule.t_change <= 0) return 1.0;
  const double x = static_cast<double>(t) / static_cast<double>(schedule.t_change);
  switch (schedule.shape) {
    case ScheduleShape::linear: return std::min(std::max(x, 0.0), 1.0);
    case ScheduleShape::cosine: return (1.0 - std::cos(std::numbers::pi * std::min(x, 1.0))) / 2.0;
    case ScheduleShape::exponential: return 1.0 - std::exp(-3.0 * x);
    case ScheduleShape::constant: break;
  }
  return schedule.constant_value;
}

Action interpolate(const Action& expert, const Action& learner, double alpha) {
  require(expert.size() == learner.size(), "interpolate: action dimensions differ");
  require(alpha >= 0.0 && alpha <= 1.0, "interpolate: alpha must lie in [0, 1]");
  if (alpha == 0.0) return expert;
  if (alpha == 1.0) return learner;
  return (1.0 - alpha) * expert + alpha * learner;
}

DaiAction dai_act(const ExpertPolicy& expert, const TD3Agent& agent, const ScheduleSpec& schedule,
                  const Observation& observation, std::int64_t t, Rng& rng, bool explore) {
  DaiAction out;
  auto& rec = out.record;
  rec.step = t;
  rec.alpha = alpha_of(schedule, t);
  rec.expert_action = expert_action(expert, agent.env, observation);
  rec.rl_action = td3_select_action(agent, observation, rng, false);
  rec.mixed_action = interpolate(rec.expert_action, rec.rl_action, rec.alpha);
  out.executed = explore ? add_exploration_noise(agent, rec.mixed_action, rng) : rec.mixed_action;
  return out;
}

}  // namespace dai
