#include "dai/agents.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dai/error.hpp"

namespace dai {

void TD3Config::validate() const {
  require(gamma >= 0.0 && gamma < 1.0, "td3.gamma must lie in [0, 1)");
  require(tau > 0.0 && tau <= 1.0, "td3.tau must lie in (0, 1]");
  require(policy_delay >= 1, "td3.policy_delay must be positive");
  require(exploration_noise_std >= 0.0, "td3.exploration_noise_std must be non-negative");
  require(target_noise_std >= 0.0, "td3.target_noise_std must be non-negative");
  require(target_noise_clip > 0.0, "td3.target_noise_clip must be positive");
  require(batch_size >= 1, "td3.batch_size must be positive");
  require(learning_rate > 0.0, "td3.learning_rate must be positive");
  require(learning_starts >= 0, "td3.learning_starts must be non-negative");
  for (int h : hidden) require(h >= 1, "td3.hidden widths must be positive");
}

Action scale_action(const EnvSpec& spec, const Vector& tanh_output) {
  return (spec.action_low.array() +
          (tanh_output.array() + 1.0) / 2.0 * (spec.action_high - spec.action_low).array())
      .matrix();
}

Matrix scale_actions(const EnvSpec& spec, const Matrix& tanh_outputs) {
  const Vector range = spec.action_high - spec.action_low;
  Matrix out = (tanh_outputs.array() + 1.0) / 2.0;
  out = out.array().colwise() * range.array();
  out.colwise() += spec.action_low;
  return out;
}

namespace {

NetworkSpec mlp_spec(int in, const std::vector<int>& hidden, int out, Activation output) {
  NetworkSpec s;
  s.layer_sizes.push_back(in);
  s.layer_sizes.insert(s.layer_sizes.end(), hidden.begin(), hidden.end());
  s.layer_sizes.push_back(out);
  s.hidden_activation = Activation::relu;
  s.output_activation = output;
  return s;
}

Matrix stack_rows(const Matrix& top, const Matrix& bottom) {
  Matrix m(top.rows() + bottom.rows(), top.cols());
  m << top, bottom;
  return m;
}

std::string batch_stats(const Batch& batch, const Vector& target) {
  std::ostringstream os;
  os << "reward mean=" << batch.rewards.mean() << " min=" << batch.rewards.minCoeff()
     << " max=" << batch.rewards.maxCoeff() << ", target mean=" << target.mean()
     << ", observation finite=" << (batch.observations.allFinite() ? "yes" : "no")
     << ", action finite=" << (batch.actions.allFinite() ? "yes" : "no");
  return os.str();
}

// One MSE regression step of a critic towards `target`; returns the loss.
double critic_step(NetworkParameters& critic, AdamState& optimizer, const Matrix& inputs,
                   const Vector& target, const char* name, const Batch& batch) {
  const ForwardTape tape = forward_tape(critic, inputs);
  const Vector residual = tape.output().row(0).transpose() - target;
  const double loss = residual.squaredNorm() / static_cast<double>(residual.size());
  if (!std::isfinite(loss))
    throw NonFiniteError(std::string("td3_update: ") + name + " loss is non-finite (" +
                         batch_stats(batch, target) + ")");
  const Matrix grad = (2.0 / static_cast<double>(residual.size())) * residual.transpose();
  adam_step(critic, backward(critic, tape, grad), optimizer);
  return loss;
}

}  // namespace

NetworkSpec actor_network_spec(const EnvSpec& env, const std::vector<int>& hidden) {
  return mlp_spec(env.obs_dim, hidden, env.action_dim, Activation::tanh);
}

NetworkSpec critic_network_spec(const EnvSpec& env, const std::vector<int>& hidden) {
  return mlp_spec(env.obs_dim + env.action_dim, hidden, 1, Activation::identity);
}

TD3Agent TD3Agent::create(const EnvSpec& env, const TD3Config& config, Rng& init_rng) {
  config.validate();
  TD3Agent a;
  a.env = env;
  a.config = config;
  a.actor = NetworkParameters::init_uniform(actor_network_spec(env, config.hidden), init_rng);
  a.critic1 = NetworkParameters::init_uniform(critic_network_spec(env, config.hidden), init_rng);
  a.critic2 = NetworkParameters::init_uniform(critic_network_spec(env, config.hidden), init_rng);
  a.actor_target = a.actor;
  a.critic1_target = a.critic1;
  a.critic2_target = a.critic2;
  a.actor_optimizer = AdamState::for_params(a.actor, config.learning_rate);
  a.critic1_optimizer = AdamState::for_params(a.critic1, config.learning_rate);
  a.critic2_optimizer = AdamState::for_params(a.critic2, config.learning_rate);
  return a;
}

bool TD3Agent::operator==(const TD3Agent& o) const {
  return config == o.config && actor == o.actor && actor_target == o.actor_target &&
         critic1 == o.critic1 && critic2 == o.critic2 && critic1_target == o.critic1_target &&
         critic2_target == o.critic2_target && actor_optimizer == o.actor_optimizer &&
         critic1_optimizer == o.critic1_optimizer && critic2_optimizer == o.critic2_optimizer &&
         update_count == o.update_count;
}

Action actor_action(const TD3Agent& agent, const Observation& observation) {
  require(observation.size() == agent.env.obs_dim, "actor: observation dimension mismatch");
  return scale_action(agent.env, forward(agent.actor, observation));
}

Action add_exploration_noise(const TD3Agent& agent, const Action& action, Rng& rng) {
  const Vector half = agent.env.action_half_range();
  Action noisy = action;
  for (Eigen::Index i = 0; i < noisy.size(); ++i)
    noisy(i) += rng.normal() * agent.config.exploration_noise_std * half(i);
  return agent.env.clip(noisy);
}

Action td3_select_action(const TD3Agent& agent, const Observation& observation, Rng& rng,
                         bool explore) {
  Action a = actor_action(agent, observation);
  return explore ? add_exploration_noise(agent, a, rng) : a;
}

Vector twin_min_q(const NetworkParameters& q1, const NetworkParameters& q2,
                  const Matrix& observations, const Matrix& actions) {
  const Matrix inputs = stack_rows(observations, actions);
  const Matrix v1 = forward_batch(q1, inputs);
  const Matrix v2 = forward_batch(q2, inputs);
  return v1.row(0).cwiseMin(v2.row(0)).transpose();
}

UpdateLosses td3_update(TD3Agent& agent, const Batch& batch, Rng& rng) {
  require(batch.size() > 0, "td3_update: empty batch");
  require(batch.observations.rows() == agent.env.obs_dim &&
              batch.next_observations.rows() == agent.env.obs_dim &&
              batch.actions.rows() == agent.env.action_dim,
          "td3_update: batch dimensions do not match the agent");
  const TD3Config& cfg = agent.config;
  const EnvSpec& env = agent.env;
  const Eigen::Index n = batch.size();
  const Vector half = env.action_half_range();

  // Target policy smoothing.
  Matrix next_actions = scale_actions(env, forward_batch(agent.actor_target, batch.next_observations));
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < next_actions.rows(); ++i) {
      const double limit = cfg.target_noise_clip * half(i);
      const double eps = std::clamp(rng.normal() * cfg.target_noise_std * half(i), -limit, limit);
      next_actions(i, j) = std::clamp(next_actions(i, j) + eps, env.action_low(i), env.action_high(i));
    }
  }
  const Vector next_q =
      twin_min_q(agent.critic1_target, agent.critic2_target, batch.next_observations, next_actions);
  const Vector target =
      (batch.rewards.array() + batch.bootstrap_masks.array() * cfg.gamma * next_q.array()).matrix();

  UpdateLosses losses;
  losses.target_mean = target.mean();
  const Matrix critic_inputs = stack_rows(batch.observations, batch.actions);
  losses.critic1_loss =
      critic_step(agent.critic1, agent.critic1_optimizer, critic_inputs, target, "critic1", batch);
  losses.critic2_loss =
      critic_step(agent.critic2, agent.critic2_optimizer, critic_inputs, target, "critic2", batch);

  agent.update_count += 1;
  if (agent.update_count % cfg.policy_delay != 0) return losses;

  // Deterministic policy gradient through critic1.
  const ForwardTape actor_tape = forward_tape(agent.actor, batch.observations);
  const Matrix actions = scale_actions(env, actor_tape.output());
  const ForwardTape q_tape = forward_tape(agent.critic1, stack_rows(batch.observations, actions));
  const double actor_loss = -q_tape.output().mean();
  if (!std::isfinite(actor_loss))
    throw NonFiniteError("td3_update: actor loss is non-finite (" + batch_stats(batch, target) + ")");
  const Matrix seed = Matrix::Constant(1, n, -1.0 / static_cast<double>(n));
  const GradientSet q_grads = backward(agent.critic1, q_tape, seed);
  Matrix action_grad = q_grads.input.bottomRows(env.action_dim);
  action_grad = action_grad.array().colwise() * half.array();
  adam_step(agent.actor, backward(agent.actor, actor_tape, action_grad), agent.actor_optimizer);
  losses.actor_loss = actor_loss;

  soft_update(agent.actor_target, agent.actor, cfg.tau);
  soft_update(agent.critic1_target, agent.critic1, cfg.tau);
  soft_update(agent.critic2_target, agent.critic2, cfg.tau);
  return losses;
}

UpdateLosses td3_update(TD3Agent& agent, const std::vector<Transition>& batch, Rng& rng) {
  require(!batch.empty(), "td3_update: empty batch");
  return td3_update(agent, Batch::from_transitions(batch), rng);
}

Action expert_action(const ExpertPolicy& expert, const EnvSpec& spec,
                     const Observation& observation) {
  if (expert.kind == ExpertKind::scripted) return scripted_expert_action(spec, observation);
  require(expert.cloned_params.has_value(), "cloned expert has no parameters");
  const NetworkParameters& p = *expert.cloned_params;
  require(p.spec.input_dim() == spec.obs_dim && p.spec.output_dim() == spec.action_dim,
          "cloned expert is not dimensioned for this environment");
  return spec.clip(scale_action(spec, forward(p, observation)));
}

BcResult bc_train(const Demonstrations& demos, const NetworkSpec& spec, const EnvSpec& env,
                  const BcOptions& options, Rng& rng) {
  if (demos.size() == 0) throw ContractViolation("bc_train: demonstration set is empty");
  spec.validate();
  require(spec.output_activation == Activation::tanh, "bc_train: expert network needs a tanh output");
  require(demos.observations.rows() == spec.input_dim() && demos.observations.rows() == env.obs_dim,
          "bc_train: observation dimension mismatch");
  require(demos.actions.rows() == spec.output_dim() && demos.actions.rows() == env.action_dim,
          "bc_train: action dimension mismatch");
  require(demos.actions.cols() == demos.observations.cols(), "bc_train: row count mismatch");
  require(options.epochs >= 1 && options.batch_size >= 1, "bc_train: epochs and batch size must be positive");
  for (Eigen::Index j = 0; j < demos.size(); ++j) {
    require(((demos.actions.col(j).array() >= env.action_low.array()) &&
             (demos.actions.col(j).array() <= env.action_high.array()))
                .all(),
            "bc_train: demonstration action outside bounds");
  }

  NetworkParameters params = NetworkParameters::init_uniform(spec, rng);
  AdamState optimizer = AdamState::for_params(params, options.learning_rate);
  const Vector half = env.action_half_range();
  const auto n = static_cast<std::size_t>(demos.size());
  std::vector<Eigen::Index> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<Eigen::Index>(i);

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t start = 0; start < n; start += options.batch_size) {
      const std::size_t count = std::min<std::size_t>(options.batch_size, n - start);
      Matrix obs(demos.observations.rows(), static_cast<Eigen::Index>(count));
      Matrix act(demos.actions.rows(), static_cast<Eigen::Index>(count));
      for (std::size_t k = 0; k < count; ++k) {
        obs.col(k) = demos.observations.col(order[start + k]);
        act.col(k) = demos.actions.col(order[start + k]);
      }
      const ForwardTape tape = forward_tape(params, obs);
      const Matrix residual = scale_actions(env, tape.output()) - act;
      const double scale = 2.0 / static_cast<double>(residual.size());
      Matrix grad = scale * residual;
      grad = grad.array().colwise() * half.array();
      adam_step(params, backward(params, tape, grad), optimizer);
    }
  }

  const Matrix residual = scale_actions(env, forward_batch(params, demos.observations)) - demos.actions;
  BcResult result;
  result.final_mse = residual.squaredNorm() / static_cast<double>(residual.size());
  result.expert = ExpertPolicy::cloned(std::move(params));
  return result;
}

}  // namespace dai
