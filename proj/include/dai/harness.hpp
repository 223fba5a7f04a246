#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dai/agents.hpp"
#include "dai/dai.hpp"
#include "dai/envs.hpp"
#include "dai/replay.hpp"
#include "dai/trajectory.hpp"

namespace dai {

enum class Algorithm { td3, td3_dai };
enum class EvalMode { actor, mixed };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& name);

struct ExpertSource {
  ExpertKind kind = ExpertKind::scripted;
  std::string path;  // cloned experts only

  std::string describe() const { return kind == ExpertKind::scripted ? "scripted" : "cloned:" + path; }
  static ExpertSource parse(const std::string& text);
  bool operator==(const ExpertSource&) const = default;
};

struct RunConfig {
  EnvId env_id = EnvId::pendulum_swingup;
  Algorithm algorithm = Algorithm::td3;
  std::int64_t total_steps = 40000;
  ScheduleSpec schedule = ScheduleSpec::linear(20000);
  ExpertSource expert_source;
  TD3Config td3;
  std::uint64_t seed = 0;
  std::int64_t eval_every = 1000;
  int eval_episodes = 10;
  std::string output_dir;

  // Uniform-random actions for t <= learning_starts (replacing the actor
  // output; no exploration noise is added to them).
  bool random_warmup = true;
  int updates_per_step = 1;
  std::size_t replay_capacity = 200000;
  EvalMode eval_mode = EvalMode::actor;
  // Training episodes overlapping steps 1..record_trajectory_steps are kept.
  std::int64_t record_trajectory_steps = 0;

  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

/// Defaults for `algorithm` on `env`, with t_change = total_steps / 2 and the
/// random warmup on for td3 and off for td3_dai.
RunConfig default_run_config(Algorithm algorithm, EnvId env, std::int64_t total_steps);

struct StepLog {
  std::int64_t step = 0;
  double alpha = 0.0;
  std::optional<double> episode_return;
};

struct EvalLog {
  std::int64_t step = 0;
  double mean = 0.0;
  double median = 0.0;
  double std = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  bool operator==(const EvalLog&) const = default;
};

struct RunMetrics {
  std::vector<StepLog> steps;
  std::vector<EvalLog> evals;
  double wall_seconds = 0.0;  // excluded from equality

  std::optional<EvalLog> eval_at(std::int64_t step) const;
  bool operator==(const RunMetrics& other) const;
};

bool operator==(const StepLog& a, const StepLog& b);

/// Metrics CSV: step,alpha,episode_return,eval_mean,eval_median,eval_ci_lo,eval_ci_hi
std::string metrics_csv_header();
std::string metrics_csv_rows(const RunMetrics& metrics);
void append_metrics_csv(const std::string& path, const RunMetrics& metrics);
/// Parses the eval rows of a metrics CSV.
std::vector<EvalLog> read_eval_log(const std::string& path);

/// Deterministic controller: observation -> action.
using Policy = std::function<Action(const Observation&)>;

struct ReturnStats {
  std::vector<double> returns;
  double mean = 0.0;
  double median = 0.0;
  double std = 0.0;  // population standard deviation
  double min = 0.0;
  double max = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

double median_of(std::vector<double> values);

/// Percentile bootstrap interval for the median.
std::pair<double, double> bootstrap_median_ci(const std::vector<double>& values, int resamples,
                                              std::uint64_t seed, double level = 0.95);

ReturnStats summarize_returns(std::vector<double> returns, std::uint64_t bootstrap_seed);

struct RolloutResult {
  double total_return = 0.0;
  Trajectory trajectory;
};

/// Runs `policy` from `state` until the time limit.
RolloutResult rollout(const EnvSpec& spec, EnvState state, const Policy& policy);

/// Noiseless episodes with reset seeds seed, seed + 1, ..., seed + episodes - 1.
ReturnStats evaluate(const Policy& policy, EnvId env_id, int episodes, std::uint64_t seed);
std::vector<Trajectory> record_episodes(const Policy& policy, EnvId env_id, int episodes,
                                        std::uint64_t seed);

Policy expert_policy(const ExpertPolicy& expert, const EnvSpec& spec);
Policy actor_policy(const TD3Agent& agent);
/// Noiseless interpolating controller at a fixed alpha.
Policy mixed_policy(const ExpertPolicy& expert, const TD3Agent& agent, double alpha);

struct DemoFileHeader {
  std::string env_id;
  int obs_dim = 0;
  int action_dim = 0;
  int episodes = 0;
  std::uint64_t seed = 0;
};

struct CollectSummary {
  std::size_t pairs = 0;
  double mean_return = 0.0;
};

/// Rolls out the expert for `episodes` (reset seeds as in `evaluate`) and
/// writes a "DAIDEMO1" file.
CollectSummary collect_demonstrations(const ExpertPolicy& expert, EnvId env_id, int episodes,
                                      std::uint64_t seed, const std::string& out_path);
std::pair<DemoFileHeader, Demonstrations> read_demo_file(const std::string& path);

/// Cloned-expert network files reuse the checkpoint container.
void save_network(const std::string& path, const NetworkParameters& params, const std::string& env_id);
NetworkParameters load_network(const std::string& path);

/// Resolves the configured expert; cloned experts are read from disk.
ExpertPolicy resolve_expert(const ExpertSource& source, const EnvSpec& spec);

/// Aborted training: carries a diagnostic bundle in what().
class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The interpolating training loop, one environment step at a time.
///
/// Per step t = 1..total_steps: alpha_t from the schedule (1 for td3), act
/// through dai_act, step the environment, store the executed transition, run
/// updates_per_step TD3 updates once t > learning_starts, reset on episode end
/// and evaluate every eval_every steps.
class Trainer {
 public:
  explicit Trainer(RunConfig config);
  /// Builds with a pre-resolved expert (skips reading expert_source).
  Trainer(RunConfig config, ExpertPolicy expert);

  void step();
  void run_until(std::int64_t t);
  void run() { run_until(config_.total_steps); }
  bool finished() const { return steps_done_ >= config_.total_steps; }

  std::int64_t steps_done() const { return steps_done_; }
  const RunConfig& config() const { return config_; }
  const EnvSpec& env_spec() const { return env_spec_; }
  const TD3Agent& agent() const { return agent_; }
  const ReplayBuffer& replay() const { return replay_; }
  const ExpertPolicy& expert() const { return expert_; }
  const RunMetrics& metrics() const { return metrics_; }
  const std::vector<Trajectory>& recorded_trajectories() const { return trajectories_; }
  long long gradient_updates() const { return agent_.update_count; }
  std::uint64_t eval_seed() const { return eval_seed_; }

  void save_checkpoint(const std::string& path) const;
  /// Restores a trainer from a checkpoint. Metrics and recorded trajectories
  /// restart empty at the checkpoint step.
  static Trainer load_checkpoint(const std::string& path);
  static Trainer load_checkpoint(const std::string& path, ExpertPolicy expert);

  bool same_state(const Trainer& other) const;

 private:
  void evaluate_now();
  Action choose_action(std::int64_t t, double alpha);

  RunConfig config_;
  EnvSpec env_spec_;
  ExpertPolicy expert_;
  ScheduleSpec effective_schedule_;
  TD3Agent agent_;
  ReplayBuffer replay_;
  Rng train_rng_;
  Rng env_seed_rng_;
  std::uint64_t eval_seed_ = 0;
  EnvState env_state_;
  Observation observation_;
  double episode_return_ = 0.0;
  std::int64_t steps_done_ = 0;
  std::int64_t episodes_done_ = 0;
  RunMetrics metrics_;
  std::vector<Trajectory> trajectories_;
  Trajectory current_trajectory_;
};

/// Runs a full training run in memory.
RunMetrics run_training(const RunConfig& config);

/// Writes config.resolved, metrics.csv, summary.json and final.ckpt into
/// `dir` (created if needed).
void write_run_outputs(const std::string& dir, const Trainer& trainer);

}  // namespace dai
