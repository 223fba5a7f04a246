#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "dai/envs.hpp"
#include "dai/numerics.hpp"
#include "dai/replay.hpp"
#include "dai/rng.hpp"

namespace dai {

struct TD3Config {
  double gamma = 0.99;
  double tau = 0.005;
  int policy_delay = 2;
  double exploration_noise_std = 0.1;  // fraction of the action half-range
  double target_noise_std = 0.2;       // fraction of the action half-range
  double target_noise_clip = 0.5;      // fraction of the action half-range
  int batch_size = 256;
  double learning_rate = 3e-4;
  int learning_starts = 1000;
  std::vector<int> hidden = {64, 64};

  void validate() const;
  bool operator==(const TD3Config&) const = default;
};

/// Maps a tanh output y in [-1, 1] to low + (y + 1) / 2 * (high - low).
Action scale_action(const EnvSpec& spec, const Vector& tanh_output);
Matrix scale_actions(const EnvSpec& spec, const Matrix& tanh_outputs);

NetworkSpec actor_network_spec(const EnvSpec& env, const std::vector<int>& hidden);
NetworkSpec critic_network_spec(const EnvSpec& env, const std::vector<int>& hidden);

struct TD3Agent {
  EnvSpec env;
  TD3Config config;
  NetworkParameters actor;
  NetworkParameters actor_target;
  NetworkParameters critic1;
  NetworkParameters critic2;
  NetworkParameters critic1_target;
  NetworkParameters critic2_target;
  AdamState actor_optimizer;
  AdamState critic1_optimizer;
  AdamState critic2_optimizer;
  long long update_count = 0;

  /// Live networks drawn from `init_rng`; targets start as exact copies.
  static TD3Agent create(const EnvSpec& env, const TD3Config& config, Rng& init_rng);

  bool operator==(const TD3Agent& other) const;
};

struct UpdateLosses {
  double critic1_loss = 0.0;
  double critic2_loss = 0.0;
  std::optional<double> actor_loss;  // set on delayed actor updates only
  double target_mean = 0.0;
};

/// Noiseless actor output scaled to the action bounds.
Action actor_action(const TD3Agent& agent, const Observation& observation);

/// a + N(0, exploration_noise_std * half_range), clipped to the bounds.
Action add_exploration_noise(const TD3Agent& agent, const Action& action, Rng& rng);

Action td3_select_action(const TD3Agent& agent, const Observation& observation, Rng& rng,
                         bool explore);

/// One TD3 update: both critics every call, actor and targets every
/// policy_delay-th call. `rng` drives target-policy smoothing noise.
UpdateLosses td3_update(TD3Agent& agent, const Batch& batch, Rng& rng);
UpdateLosses td3_update(TD3Agent& agent, const std::vector<Transition>& batch, Rng& rng);

/// min(Q1, Q2)(s, a) for every column.
Vector twin_min_q(const NetworkParameters& q1, const NetworkParameters& q2,
                  const Matrix& observations, const Matrix& actions);

enum class ExpertKind { scripted, cloned };

struct ExpertPolicy {
  ExpertKind kind = ExpertKind::scripted;
  std::optional<NetworkParameters> cloned_params;

  static ExpertPolicy scripted() { return {}; }
  static ExpertPolicy cloned(NetworkParameters params) {
    return {ExpertKind::cloned, std::move(params)};
  }
};

Action expert_action(const ExpertPolicy& expert, const EnvSpec& spec,
                     const Observation& observation);

struct Demonstrations {
  Matrix observations;  // obs_dim x n
  Matrix actions;       // action_dim x n
  Eigen::Index size() const { return observations.cols(); }
};

struct BcOptions {
  int epochs = 200;
  int batch_size = 256;
  double learning_rate = 1e-3;
};

struct BcResult {
  ExpertPolicy expert;
  double final_mse = 0.0;  // over the whole dataset, in action units
};

/// Mini-batch Adam regression of actions on observations. The network must
/// have a tanh output; predictions are scaled to the environment's bounds.
BcResult bc_train(const Demonstrations& demos, const NetworkSpec& spec, const EnvSpec& env,
                  const BcOptions& options, Rng& rng);

}  // namespace dai
