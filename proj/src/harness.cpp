#include "dai/harness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "dai/binary_io.hpp"
#include "dai/config.hpp"
#include "dai/error.hpp"

namespace dai {

namespace {

constexpr std::string_view kCheckpointMagic = "DAICKPT1";
constexpr std::string_view kDemoMagic = "DAIDEMO1";
constexpr int kCheckpointVersion = 1;
constexpr int kBootstrapResamples = 10000;

using nlohmann::json;

std::uint64_t bits(double d) { return std::bit_cast<std::uint64_t>(d); }
double from_bits(std::uint64_t b) { return std::bit_cast<double>(b); }

json rng_to_json(const Rng& rng) {
  const auto snap = rng.snapshot();
  return json{{"state", json::array({snap.state[0], snap.state[1], snap.state[2], snap.state[3]})},
              {"has_spare", snap.has_spare},
              {"spare_bits", bits(snap.spare)}};
}

Rng rng_from_json(const json& j) {
  Rng::Snapshot snap;
  for (int i = 0; i < 4; ++i) snap.state[i] = j.at("state").at(i).get<std::uint64_t>();
  snap.has_spare = j.at("has_spare").get<bool>();
  snap.spare = from_bits(j.at("spare_bits").get<std::uint64_t>());
  Rng rng;
  rng.restore(snap);
  return rng;
}

json spec_to_json(const NetworkSpec& s) {
  return json{{"layer_sizes", s.layer_sizes},
              {"hidden_activation", to_string(s.hidden_activation)},
              {"output_activation", to_string(s.output_activation)}};
}

NetworkSpec spec_from_json(const json& j) {
  NetworkSpec s;
  s.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
  s.hidden_activation = activation_from_string(j.at("hidden_activation").get<std::string>());
  s.output_activation = activation_from_string(j.at("output_activation").get<std::string>());
  s.validate();
  return s;
}

json adam_to_json(const AdamState& s) {
  return json{{"step_count", s.step_count},
              {"learning_rate_bits", bits(s.learning_rate)},
              {"beta1_bits", bits(s.beta1)},
              {"beta2_bits", bits(s.beta2)},
              {"epsilon_bits", bits(s.epsilon)}};
}

void adam_from_json(const json& j, AdamState& s) {
  s.step_count = j.at("step_count").get<long long>();
  s.learning_rate = from_bits(j.at("learning_rate_bits").get<std::uint64_t>());
  s.beta1 = from_bits(j.at("beta1_bits").get<std::uint64_t>());
  s.beta2 = from_bits(j.at("beta2_bits").get<std::uint64_t>());
  s.epsilon = from_bits(j.at("epsilon_bits").get<std::uint64_t>());
}

// Declared arrays laid out back to back in the payload.
class ArrayWriter {
 public:
  void add(const std::string& name, const std::vector<double>& values) {
    index_.push_back(json{{"name", name}, {"count", values.size()}});
    payload_.insert(payload_.end(), values.begin(), values.end());
  }
  const json& index() const { return index_; }
  const std::vector<double>& payload() const { return payload_; }

 private:
  json index_ = json::array();
  std::vector<double> payload_;
};

class ArrayReader {
 public:
  ArrayReader(const json& index, const std::vector<double>& payload, const std::string& path) {
    std::size_t total = 0;
    for (const auto& entry : index) {
      const auto name = entry.at("name").get<std::string>();
      const auto count = entry.at("count").get<std::size_t>();
      spans_[name] = {total, count};
      total += count;
    }
    if (total != payload.size())
      throw FormatError("'" + path + "': corrupt file, payload holds " + std::to_string(payload.size()) +
                        " values but the header declares " + std::to_string(total));
    payload_ = &payload;
    path_ = path;
  }
  std::vector<double> get(const std::string& name) const {
    const auto it = spans_.find(name);
    if (it == spans_.end()) throw FormatError("'" + path_ + "': missing array '" + name + "'");
    const auto [offset, count] = it->second;
    return {payload_->begin() + static_cast<std::ptrdiff_t>(offset),
            payload_->begin() + static_cast<std::ptrdiff_t>(offset + count)};
  }
  void into(const std::string& name, LayerBlocks& blocks) const {
    const auto v = get(name);
    if (v.size() != blocks.size())
      throw FormatError("'" + path_ + "': array '" + name + "' does not match its architecture");
    blocks.assign(v);
  }

 private:
  std::map<std::string, std::pair<std::size_t, std::size_t>> spans_;
  const std::vector<double>* payload_ = nullptr;
  std::string path_;
};

void check_version(const json& header, const std::string& path, const std::string& kind) {
  const int version = header.value("format_version", -1);
  if (version != kCheckpointVersion)
    throw FormatError("'" + path + "': incompatible format version " + std::to_string(version) +
                      " (supported: " + std::to_string(kCheckpointVersion) + ")");
  if (header.value("kind", std::string()) != kind)
    throw FormatError("'" + path + "': file holds a '" + header.value("kind", std::string()) +
                      "', expected '" + kind + "'");
}

std::string csv_number(double v) { return format_double(v); }

}  // namespace

std::string to_string(Algorithm a) { return a == Algorithm::td3 ? "td3" : "td3_dai"; }

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "td3") return Algorithm::td3;
  if (name == "td3_dai") return Algorithm::td3_dai;
  throw ConfigError("unknown algorithm '" + name + "' (expected td3 or td3_dai)");
}

ExpertSource ExpertSource::parse(const std::string& text) {
  if (text == "scripted") return {};
  if (text.rfind("cloned:", 0) == 0 && text.size() > 7) return {ExpertKind::cloned, text.substr(7)};
  throw ConfigError("expert: expected 'scripted' or 'cloned:<path>', got '" + text + "'");
}

void RunConfig::validate() const {
  require(total_steps >= 1, "total_steps must be positive");
  td3.validate();
  require(eval_every >= 1, "eval_every must be positive");
  require(eval_episodes >= 1, "eval_episodes must be positive");
  require(updates_per_step >= 1, "updates_per_step must be positive");
  require(replay_capacity >= 1, "replay_capacity must be positive");
  require(record_trajectory_steps >= 0, "record_trajectory_steps must be non-negative");
  schedule.validate();
  if (algorithm == Algorithm::td3_dai && expert_source.kind == ExpertKind::cloned)
    require(!expert_source.path.empty(), "td3_dai with a cloned expert needs a path");
}

RunConfig default_run_config(Algorithm algorithm, EnvId env, std::int64_t total_steps) {
  RunConfig c;
  c.env_id = env;
  c.algorithm = algorithm;
  c.total_steps = total_steps;
  c.schedule = ScheduleSpec::linear(total_steps / 2);
  c.random_warmup = algorithm == Algorithm::td3;
  return c;
}

bool operator==(const StepLog& a, const StepLog& b) {
  return a.step == b.step && a.alpha == b.alpha && a.episode_return == b.episode_return;
}

bool RunMetrics::operator==(const RunMetrics& other) const {
  return steps == other.steps && evals == other.evals;
}

std::optional<EvalLog> RunMetrics::eval_at(std::int64_t step) const {
  for (const auto& e : evals)
    if (e.step == step) return e;
  return std::nullopt;
}

std::string metrics_csv_header() {
  return "step,alpha,episode_return,eval_mean,eval_median,eval_ci_lo,eval_ci_hi\n";
}

std::string metrics_csv_rows(const RunMetrics& metrics) {
  std::map<std::int64_t, const EvalLog*> evals;
  for (const auto& e : metrics.evals) evals[e.step] = &e;
  std::string out;
  for (const auto& s : metrics.steps) {
    out += std::to_string(s.step) + "," + csv_number(s.alpha) + ",";
    if (s.episode_return) out += csv_number(*s.episode_return);
    const auto it = evals.find(s.step);
    if (it != evals.end()) {
      const EvalLog& e = *it->second;
      out += "," + csv_number(e.mean) + "," + csv_number(e.median) + "," + csv_number(e.ci_lo) + "," +
             csv_number(e.ci_hi) + "\n";
    } else {
      out += ",,,,\n";
    }
  }
  return out;
}

void append_metrics_csv(const std::string& path, const RunMetrics& metrics) {
  const bool fresh = !std::filesystem::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot open '" + path + "' for appending");
  if (fresh) out << metrics_csv_header();
  out << metrics_csv_rows(metrics);
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::vector<EvalLog> read_eval_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open metrics '" + path + "'");
  std::string line;
  std::getline(in, line);
  if (line + "\n" != metrics_csv_header())
    throw FormatError("'" + path + "': unexpected metrics header");
  std::vector<EvalLog> out;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    while (f.size() < 7) f.emplace_back();
    if (f[3].empty()) continue;
    EvalLog e;
    e.step = parse_int(f[0], "step");
    e.mean = parse_double(f[3], "eval_mean");
    e.median = parse_double(f[4], "eval_median");
    e.ci_lo = parse_double(f[5], "eval_ci_lo");
    e.ci_hi = parse_double(f[6], "eval_ci_hi");
    out.push_back(e);
  }
  return out;
}

double median_of(std::vector<double> values) {
  require(!values.empty(), "median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {
double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0 || sorted[lo] == sorted[hi]) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}
}  // namespace

std::pair<double, double> bootstrap_median_ci(const std::vector<double>& values, int resamples,
                                              std::uint64_t seed, double level) {
  require(!values.empty(), "bootstrap of an empty sample");
  require(resamples >= 1, "bootstrap needs at least one resample");
  Rng rng = Rng::stream(seed, "bootstrap");
  std::vector<double> medians(static_cast<std::size_t>(resamples));
  std::vector<double> draw(values.size());
  for (auto& m : medians) {
    for (auto& d : draw) d = values[rng.below(values.size())];
    m = median_of(draw);
  }
  std::sort(medians.begin(), medians.end());
  const double tail = (1.0 - level) / 2.0;
  return {quantile_sorted(medians, tail), quantile_sorted(medians, 1.0 - tail)};
}

ReturnStats summarize_returns(std::vector<double> returns, std::uint64_t bootstrap_seed) {
  require(!returns.empty(), "no returns to summarize");
  ReturnStats s;
  const double n = static_cast<double>(returns.size());
  double sum = 0.0;
  for (double r : returns) sum += r;
  s.mean = sum / n;
  double sq = 0.0;
  for (double r : returns) sq += (r - s.mean) * (r - s.mean);
  s.std = std::sqrt(sq / n);
  s.min = *std::min_element(returns.begin(), returns.end());
  s.max = *std::max_element(returns.begin(), returns.end());
  s.median = median_of(returns);
  std::tie(s.ci_lo, s.ci_hi) = bootstrap_median_ci(returns, kBootstrapResamples, bootstrap_seed);
  s.returns = std::move(returns);
  return s;
}

RolloutResult rollout(const EnvSpec& spec, EnvState state, const Policy& policy) {
  RolloutResult r;
  r.trajectory.env_id = spec.env_id;
  while (state.step_count < spec.max_episode_steps) {
    const Observation obs = observe(spec, state);
    const EnvState before = state;
    const StepResult step = env_step(spec, state, policy(obs));
    r.total_return += step.reward;
    r.trajectory.append(before, obs, step.reward, step.done);
  }
  return r;
}

std::vector<Trajectory> record_episodes(const Policy& policy, EnvId env_id, int episodes,
                                        std::uint64_t seed) {
  require(episodes >= 1, "need at least one episode");
  const EnvSpec spec = EnvSpec::make(env_id);
  std::vector<Trajectory> out;
  for (int k = 0; k < episodes; ++k)
    out.push_back(rollout(spec, env_reset(spec, seed + static_cast<std::uint64_t>(k)).first, policy).trajectory);
  return out;
}

ReturnStats evaluate(const Policy& policy, EnvId env_id, int episodes, std::uint64_t seed) {
  require(episodes >= 1, "evaluate: need at least one episode");
  const EnvSpec spec = EnvSpec::make(env_id);
  std::vector<double> returns;
  for (int k = 0; k < episodes; ++k) {
    auto [state, obs] = env_reset(spec, seed + static_cast<std::uint64_t>(k));
    returns.push_back(rollout(spec, state, policy).total_return);
  }
  return summarize_returns(std::move(returns), seed);
}

Policy expert_policy(const ExpertPolicy& expert, const EnvSpec& spec) {
  return [expert, spec](const Observation& obs) { return expert_action(expert, spec, obs); };
}

Policy actor_policy(const TD3Agent& agent) {
  return [&agent](const Observation& obs) { return actor_action(agent, obs); };
}

Policy mixed_policy(const ExpertPolicy& expert, const TD3Agent& agent, double alpha) {
  return [&expert, &agent, alpha](const Observation& obs) {
    return interpolate(expert_action(expert, agent.env, obs), actor_action(agent, obs), alpha);
  };
}

CollectSummary collect_demonstrations(const ExpertPolicy& expert, EnvId env_id, int episodes,
                                      std::uint64_t seed, const std::string& out_path) {
  require(episodes >= 1, "collect: need at least one episode");
  const EnvSpec spec = EnvSpec::make(env_id);
  std::vector<double> rows;
  double total = 0.0;
  std::size_t pairs = 0;
  for (int k = 0; k < episodes; ++k) {
    EnvState state = env_reset(spec, seed + static_cast<std::uint64_t>(k)).first;
    while (state.step_count < spec.max_episode_steps) {
      const Observation obs = observe(spec, state);
      const Action a = expert_action(expert, spec, obs);
      rows.insert(rows.end(), obs.data(), obs.data() + obs.size());
      rows.insert(rows.end(), a.data(), a.data() + a.size());
      total += env_step(spec, state, a).reward;
      ++pairs;
    }
  }
  const json header{{"env_id", to_string(env_id)},
                    {"obs_dim", spec.obs_dim},
                    {"action_dim", spec.action_dim},
                    {"episodes", episodes},
                    {"seed", seed},
                    {"rows", pairs}};
  write_container(out_path, kDemoMagic, header, rows);
  return {pairs, total / episodes};
}

std::pair<DemoFileHeader, Demonstrations> read_demo_file(const std::string& path) {
  const BinaryContainer c = read_container(path, kDemoMagic);
  DemoFileHeader h;
  try {
    h.env_id = c.header.at("env_id").get<std::string>();
    h.obs_dim = c.header.at("obs_dim").get<int>();
    h.action_dim = c.header.at("action_dim").get<int>();
    h.episodes = c.header.at("episodes").get<int>();
    h.seed = c.header.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw FormatError("'" + path + "': malformed demo header: " + e.what());
  }
  const std::size_t width = static_cast<std::size_t>(h.obs_dim + h.action_dim);
  if (width == 0 || c.payload.size() % width != 0)
    throw FormatError("'" + path + "': corrupt file, payload is not whole rows");
  const auto n = static_cast<Eigen::Index>(c.payload.size() / width);
  Demonstrations d;
  d.observations.resize(h.obs_dim, n);
  d.actions.resize(h.action_dim, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double* row = c.payload.data() + static_cast<std::size_t>(j) * width;
    for (int k = 0; k < h.obs_dim; ++k) d.observations(k, j) = row[k];
    for (int k = 0; k < h.action_dim; ++k) d.actions(k, j) = row[h.obs_dim + k];
  }
  return {h, d};
}

void save_network(const std::string& path, const NetworkParameters& params, const std::string& env_id) {
  ArrayWriter arrays;
  arrays.add("network", params.blocks.flatten());
  const json header{{"format_version", kCheckpointVersion},
                    {"kind", "network"},
                    {"env_id", env_id},
                    {"architecture", {{"network", spec_to_json(params.spec)}}},
                    {"arrays", arrays.index()}};
  write_container(path, kCheckpointMagic, header, arrays.payload());
}

NetworkParameters load_network(const std::string& path) {
  const BinaryContainer c = read_container(path, kCheckpointMagic);
  check_version(c.header, path, "network");
  try {
    NetworkParameters p = NetworkParameters::zeros(spec_from_json(c.header.at("architecture").at("network")));
    ArrayReader(c.header.at("arrays"), c.payload, path).into("network", p.blocks);
    return p;
  } catch (const json::exception& e) {
    throw FormatError("'" + path + "': malformed network header: " + e.what());
  }
}

ExpertPolicy resolve_expert(const ExpertSource& source, const EnvSpec& spec) {
  if (source.kind == ExpertKind::scripted) return ExpertPolicy::scripted();
  NetworkParameters p = load_network(source.path);
  require(p.spec.input_dim() == spec.obs_dim && p.spec.output_dim() == spec.action_dim,
          "cloned expert '" + source.path + "' is not dimensioned for " + to_string(spec.env_id));
  return ExpertPolicy::cloned(std::move(p));
}

// ---------------------------------------------------------------------------
// Trainer

Trainer::Trainer(RunConfig config)
    : Trainer(config, config.algorithm == Algorithm::td3_dai
                          ? resolve_expert(config.expert_source, EnvSpec::make(config.env_id))
                          : ExpertPolicy::scripted()) {}

Trainer::Trainer(RunConfig config, ExpertPolicy expert)
    : config_(std::move(config)),
      env_spec_(EnvSpec::make(config_.env_id)),
      expert_(std::move(expert)),
      replay_(config_.replay_capacity, env_spec_.obs_dim, env_spec_.action_dim) {
  config_.validate();
  effective_schedule_ = config_.algorithm == Algorithm::td3 ? ScheduleSpec::constant(1.0) : config_.schedule;
  Rng init_rng = Rng::stream(config_.seed, "init");
  agent_ = TD3Agent::create(env_spec_, config_.td3, init_rng);
  train_rng_ = Rng::stream(config_.seed, "train");
  env_seed_rng_ = Rng::stream(config_.seed, "env");
  eval_seed_ = Rng::stream(config_.seed, "eval").next_u64();
  std::tie(env_state_, observation_) = env_reset(env_spec_, env_seed_rng_.next_u64());
  current_trajectory_.env_id = env_spec_.env_id;
}

Action Trainer::choose_action(std::int64_t t, double alpha) {
  if (config_.random_warmup && t <= config_.td3.learning_starts) {
    Action random(env_spec_.action_dim);
    for (Eigen::Index i = 0; i < random.size(); ++i)
      random(i) = train_rng_.uniform(env_spec_.action_low(i), env_spec_.action_high(i));
    return interpolate(expert_action(expert_, env_spec_, observation_), random, alpha);
  }
  return dai_act(expert_, agent_, effective_schedule_, observation_, t, train_rng_, true).executed;
}

void Trainer::step() {
  require(!finished(), "training run already finished");
  const auto started = std::chrono::steady_clock::now();
  const std::int64_t t = steps_done_ + 1;
  const double alpha = alpha_of(effective_schedule_, t);
  const Action action = choose_action(t, alpha);

  const EnvState before = env_state_;
  const StepResult result = env_step(env_spec_, env_state_, action);
  if (!std::isfinite(result.reward)) {
    throw TrainingAborted("aborted at step " + std::to_string(t) + ": non-finite reward; train rng " +
                          rng_to_json(train_rng_).dump());
  }
  replay_.push({observation_, env_spec_.clip(action), result.reward, result.observation, result.done,
                result.done_reason});
  episode_return_ += result.reward;
  if (t <= config_.record_trajectory_steps || current_trajectory_.size() > 0)
    current_trajectory_.append(before, observation_, result.reward, result.done);
  observation_ = result.observation;
  steps_done_ = t;

  if (t > config_.td3.learning_starts &&
      replay_.size() >= static_cast<std::size_t>(config_.td3.batch_size)) {
    for (int k = 0; k < config_.updates_per_step; ++k) {
      const Batch batch = replay_.sample_batch(static_cast<std::size_t>(config_.td3.batch_size), train_rng_);
      try {
        td3_update(agent_, batch, train_rng_);
      } catch (const NonFiniteError& e) {
        throw TrainingAborted("aborted at step " + std::to_string(t) + ": " + e.what() + "; train rng " +
                              rng_to_json(train_rng_).dump());
      }
    }
  }

  StepLog log{t, alpha, std::nullopt};
  if (result.done) {
    log.episode_return = episode_return_;
    ++episodes_done_;
    if (current_trajectory_.size() > 0) {
      trajectories_.push_back(std::move(current_trajectory_));
      current_trajectory_ = Trajectory{};
      current_trajectory_.env_id = env_spec_.env_id;
    }
    std::tie(env_state_, observation_) = env_reset(env_spec_, env_seed_rng_.next_u64());
    episode_return_ = 0.0;
  }
  metrics_.steps.push_back(log);
  if (t % config_.eval_every == 0) evaluate_now();
  metrics_.wall_seconds +=
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
}

void Trainer::run_until(std::int64_t t) {
  const std::int64_t stop = std::min(t, config_.total_steps);
  while (steps_done_ < stop) step();
}

void Trainer::evaluate_now() {
  const Policy policy = config_.eval_mode == EvalMode::actor
                            ? actor_policy(agent_)
                            : mixed_policy(expert_, agent_, alpha_of(effective_schedule_, steps_done_));
  const ReturnStats s = evaluate(policy, env_spec_.env_id, config_.eval_episodes, eval_seed_);
  metrics_.evals.push_back({steps_done_, s.mean, s.median, s.std, s.ci_lo, s.ci_hi});
}

bool Trainer::same_state(const Trainer& o) const {
  return config_ == o.config_ && agent_ == o.agent_ && replay_ == o.replay_ &&
         train_rng_ == o.train_rng_ && env_seed_rng_ == o.env_seed_rng_ && eval_seed_ == o.eval_seed_ &&
         env_state_ == o.env_state_ && bits(episode_return_) == bits(o.episode_return_) &&
         steps_done_ == o.steps_done_ && episodes_done_ == o.episodes_done_;
}

void Trainer::save_checkpoint(const std::string& path) const {
  ArrayWriter arrays;
  const std::pair<const char*, const NetworkParameters*> nets[] = {
      {"actor", &agent_.actor},         {"actor_target", &agent_.actor_target},
      {"critic1", &agent_.critic1},     {"critic2", &agent_.critic2},
      {"critic1_target", &agent_.critic1_target}, {"critic2_target", &agent_.critic2_target}};
  json architecture = json::object();
  for (const auto& [name, net] : nets) {
    arrays.add(name, net->blocks.flatten());
    architecture[name] = spec_to_json(net->spec);
  }
  const std::pair<const char*, const AdamState*> opts[] = {{"actor_optimizer", &agent_.actor_optimizer},
                                                           {"critic1_optimizer", &agent_.critic1_optimizer},
                                                           {"critic2_optimizer", &agent_.critic2_optimizer}};
  json optimizers = json::object();
  for (const auto& [name, opt] : opts) {
    arrays.add(std::string(name) + ".first_moment", opt->first_moment.flatten());
    arrays.add(std::string(name) + ".second_moment", opt->second_moment.flatten());
    optimizers[name] = adam_to_json(*opt);
  }
  arrays.add("replay", replay_.storage_flat());
  if (expert_.kind == ExpertKind::cloned) arrays.add("expert", expert_.cloned_params->blocks.flatten());

  json config = json::object();
  for (const auto& [k, v] : to_key_values(config_)) config[k] = v;
  json physics = json::array();
  for (double p : env_state_.physics) physics.push_back(bits(p));

  json header{{"format_version", kCheckpointVersion},
              {"kind", "trainer"},
              {"config", config},
              {"architecture", architecture},
              {"optimizers", optimizers},
              {"step", steps_done_},
              {"episodes_done", episodes_done_},
              {"update_count", agent_.update_count},
              {"episode_return_bits", bits(episode_return_)},
              {"replay_insert_count", replay_.insert_count()},
              {"rng",
               {{"train", rng_to_json(train_rng_)},
                {"env_seed", rng_to_json(env_seed_rng_)},
                {"eval_seed", eval_seed_}}},
              {"env", {{"physics_bits", physics}, {"step_count", env_state_.step_count}, {"rng", rng_to_json(env_state_.rng)}}},
              {"arrays", arrays.index()}};
  if (expert_.kind == ExpertKind::cloned) header["architecture"]["expert"] = spec_to_json(expert_.cloned_params->spec);
  write_container(path, kCheckpointMagic, header, arrays.payload());
}

Trainer Trainer::load_checkpoint(const std::string& path) {
  const BinaryContainer c = read_container(path, kCheckpointMagic);
  check_version(c.header, path, "trainer");
  try {
    KeyValues kv;
    for (const auto& [k, v] : c.header.at("config").items()) kv.emplace_back(k, v.get<std::string>());
    const RunConfig config = run_config_from(kv);
    ExpertPolicy expert = ExpertPolicy::scripted();
    if (c.header.at("architecture").contains("expert")) {
      NetworkParameters p = NetworkParameters::zeros(spec_from_json(c.header.at("architecture").at("expert")));
      ArrayReader(c.header.at("arrays"), c.payload, path).into("expert", p.blocks);
      expert = ExpertPolicy::cloned(std::move(p));
    }
    return load_checkpoint(path, std::move(expert));
  } catch (const json::exception& e) {
    throw FormatError("'" + path + "': malformed checkpoint header: " + e.what());
  }
}

Trainer Trainer::load_checkpoint(const std::string& path, ExpertPolicy expert) {
  const BinaryContainer c = read_container(path, kCheckpointMagic);
  check_version(c.header, path, "trainer");
  try {
    const json& h = c.header;
    KeyValues kv;
    for (const auto& [k, v] : h.at("config").items()) kv.emplace_back(k, v.get<std::string>());
    Trainer t(run_config_from(kv), std::move(expert));
    const ArrayReader arrays(h.at("arrays"), c.payload, path);

    const std::pair<const char*, NetworkParameters*> nets[] = {
        {"actor", &t.agent_.actor},         {"actor_target", &t.agent_.actor_target},
        {"critic1", &t.agent_.critic1},     {"critic2", &t.agent_.critic2},
        {"critic1_target", &t.agent_.critic1_target}, {"critic2_target", &t.agent_.critic2_target}};
    for (const auto& [name, net] : nets) {
      if (spec_from_json(h.at("architecture").at(name)) != net->spec)
        throw FormatError("'" + path + "': architecture of '" + name + "' does not match its config");
      arrays.into(name, net->blocks);
    }
    const std::pair<const char*, AdamState*> opts[] = {{"actor_optimizer", &t.agent_.actor_optimizer},
                                                       {"critic1_optimizer", &t.agent_.critic1_optimizer},
                                                       {"critic2_optimizer", &t.agent_.critic2_optimizer}};
    for (const auto& [name, opt] : opts) {
      adam_from_json(h.at("optimizers").at(name), *opt);
      arrays.into(std::string(name) + ".first_moment", opt->first_moment);
      arrays.into(std::string(name) + ".second_moment", opt->second_moment);
    }
    t.agent_.update_count = h.at("update_count").get<long long>();
    t.replay_.restore(h.at("replay_insert_count").get<std::uint64_t>(), arrays.get("replay"));
    t.train_rng_ = rng_from_json(h.at("rng").at("train"));
    t.env_seed_rng_ = rng_from_json(h.at("rng").at("env_seed"));
    t.eval_seed_ = h.at("rng").at("eval_seed").get<std::uint64_t>();
    const json& env = h.at("env");
    for (std::size_t i = 0; i < t.env_state_.physics.size(); ++i)
      t.env_state_.physics[i] = from_bits(env.at("physics_bits").at(i).get<std::uint64_t>());
    t.env_state_.step_count = env.at("step_count").get<int>();
    t.env_state_.rng = rng_from_json(env.at("rng"));
    t.observation_ = observe(t.env_spec_, t.env_state_);
    t.episode_return_ = from_bits(h.at("episode_return_bits").get<std::uint64_t>());
    t.steps_done_ = h.at("step").get<std::int64_t>();
    t.episodes_done_ = h.at("episodes_done").get<std::int64_t>();
    return t;
  } catch (const json::exception& e) {
    throw FormatError("'" + path + "': malformed checkpoint header: " + e.what());
  }
}

RunMetrics run_training(const RunConfig& config) {
  Trainer trainer(config);
  trainer.run();
  return trainer.metrics();
}

void write_run_outputs(const std::string& dir, const Trainer& trainer) {
  std::filesystem::create_directories(dir);
  const std::string config_path = dir + "/config.resolved";
  {
    std::ofstream out(config_path, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + config_path + "'");
    out << format_key_values(to_key_values(trainer.config()));
  }
  append_metrics_csv(dir + "/metrics.csv", trainer.metrics());
  json summary{{"steps", trainer.steps_done()},
               {"gradient_updates", trainer.gradient_updates()},
               {"wall_seconds", trainer.metrics().wall_seconds}};
  if (!trainer.metrics().evals.empty()) {
    const EvalLog& last = trainer.metrics().evals.back();
    summary["final_eval"] = {{"step", last.step}, {"mean", last.mean}, {"median", last.median},
                             {"ci_lo", last.ci_lo}, {"ci_hi", last.ci_hi}};
  }
  std::ofstream out(dir + "/summary.json", std::ios::trunc);
  if (!out) throw IoError("cannot write '" + dir + "/summary.json'");
  out << summary.dump(2) << "\n";
  trainer.save_checkpoint(dir + "/final.ckpt");
}

}  // namespace dai
