#include "dai/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "dai/error.hpp"

namespace dai {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& text, const std::string& key) {
  if (text == "true" || text == "on" || text == "1") return true;
  if (text == "false" || text == "off" || text == "0") return false;
  throw ConfigError(key + ": expected a boolean, got '" + text + "'");
}

std::vector<int> parse_int_list(const std::string& text, const std::string& key) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(static_cast<int>(parse_int(trim(item), key)));
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& key) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  return v;
}

long long parse_int(const std::string& text, const std::string& key) {
  long long v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& text, const std::string& key) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
  return v;
}

KeyValues parse_key_values(const std::string& text, const std::string& source_name) {
  KeyValues kv;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  std::vector<std::string> errors;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back(source_name + ":" + std::to_string(line_no) + ": expected key = value");
      continue;
    }
    kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  if (!errors.empty()) {
    std::string msg;
    for (const auto& e : errors) msg += (msg.empty() ? "" : "; ") + e;
    throw ConfigError(msg);
  }
  return kv;
}

KeyValues read_key_values_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str(), path);
}

KeyValues parse_overrides(const std::vector<std::string>& overrides) {
  KeyValues kv;
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not key=value");
    kv.emplace_back(trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
  }
  return kv;
}

std::string format_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

const std::vector<std::string>& run_config_keys() {
  static const std::vector<std::string> keys = {
      "env",
      "algorithm",
      "total_steps",
      "seed",
      "eval_every",
      "eval_episodes",
      "eval_mode",
      "output_dir",
      "expert",
      "schedule.shape",
      "schedule.t_change",
      "schedule.constant_value",
      "td3.gamma",
      "td3.tau",
      "td3.policy_delay",
      "td3.exploration_noise_std",
      "td3.target_noise_std",
      "td3.target_noise_clip",
      "td3.batch_size",
      "td3.learning_rate",
      "td3.learning_starts",
      "td3.hidden",
      "random_warmup",
      "updates_per_step",
      "replay_capacity",
      "record_trajectory_steps",
  };
  return keys;
}

RunConfig run_config_from(const KeyValues& kv) {
  std::map<std::string, std::string> values;
  std::vector<std::string> errors;
  const auto& keys = run_config_keys();
  for (const auto& [k, v] : kv) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end())
      errors.push_back("unknown key '" + k + "'");
    else
      values[k] = v;
  }

  auto get = [&](const std::string& key) -> const std::string* {
    const auto it = values.find(key);
    return it == values.end() ? nullptr : &it->second;
  };
  auto attempt = [&](const std::string& key, auto&& apply) {
    if (const std::string* v = get(key)) {
      try {
        apply(*v);
      } catch (const std::exception& e) {
        errors.push_back(e.what());
      }
    }
  };

  Algorithm algorithm = Algorithm::td3;
  EnvId env = EnvId::pendulum_swingup;
  std::int64_t total_steps = 40000;
  attempt("algorithm", [&](const std::string& v) { algorithm = algorithm_from_string(v); });
  attempt("env", [&](const std::string& v) { env = env_id_from_string(v); });
  attempt("total_steps", [&](const std::string& v) { total_steps = parse_int(v, "total_steps"); });

  RunConfig c = default_run_config(algorithm, env, std::max<std::int64_t>(total_steps, 1));
  c.total_steps = total_steps;
  attempt("seed", [&](const std::string& v) { c.seed = parse_u64(v, "seed"); });
  attempt("eval_every", [&](const std::string& v) { c.eval_every = parse_int(v, "eval_every"); });
  attempt("eval_episodes", [&](const std::string& v) { c.eval_episodes = static_cast<int>(parse_int(v, "eval_episodes")); });
  attempt("eval_mode", [&](const std::string& v) {
    if (v == "actor") c.eval_mode = EvalMode::actor;
    else if (v == "mixed") c.eval_mode = EvalMode::mixed;
    else throw ConfigError("eval_mode: expected actor or mixed, got '" + v + "'");
  });
  attempt("output_dir", [&](const std::string& v) { c.output_dir = v; });
  attempt("expert", [&](const std::string& v) { c.expert_source = ExpertSource::parse(v); });
  attempt("schedule.shape", [&](const std::string& v) { c.schedule.shape = schedule_shape_from_string(v); });
  attempt("schedule.t_change", [&](const std::string& v) { c.schedule.t_change = parse_int(v, "schedule.t_change"); });
  attempt("schedule.constant_value", [&](const std::string& v) { c.schedule.constant_value = parse_double(v, "schedule.constant_value"); });
  attempt("td3.gamma", [&](const std::string& v) { c.td3.gamma = parse_double(v, "td3.gamma"); });
  attempt("td3.tau", [&](const std::string& v) { c.td3.tau = parse_double(v, "td3.tau"); });
  attempt("td3.policy_delay", [&](const std::string& v) { c.td3.policy_delay = static_cast<int>(parse_int(v, "td3.policy_delay")); });
  attempt("td3.exploration_noise_std", [&](const std::string& v) { c.td3.exploration_noise_std = parse_double(v, "td3.exploration_noise_std"); });
  attempt("td3.target_noise_std", [&](const std::string& v) { c.td3.target_noise_std = parse_double(v, "td3.target_noise_std"); });
  attempt("td3.target_noise_clip", [&](const std::string& v) { c.td3.target_noise_clip = parse_double(v, "td3.target_noise_clip"); });
  attempt("td3.batch_size", [&](const std::string& v) { c.td3.batch_size = static_cast<int>(parse_int(v, "td3.batch_size")); });
  attempt("td3.learning_rate", [&](const std::string& v) { c.td3.learning_rate = parse_double(v, "td3.learning_rate"); });
  attempt("td3.learning_starts", [&](const std::string& v) { c.td3.learning_starts = static_cast<int>(parse_int(v, "td3.learning_starts")); });
  attempt("td3.hidden", [&](const std::string& v) { c.td3.hidden = parse_int_list(v, "td3.hidden"); });
  attempt("random_warmup", [&](const std::string& v) { c.random_warmup = parse_bool(v, "random_warmup"); });
  attempt("updates_per_step", [&](const std::string& v) { c.updates_per_step = static_cast<int>(parse_int(v, "updates_per_step")); });
  attempt("replay_capacity", [&](const std::string& v) { c.replay_capacity = parse_u64(v, "replay_capacity"); });
  attempt("record_trajectory_steps", [&](const std::string& v) { c.record_trajectory_steps = parse_int(v, "record_trajectory_steps"); });

  if (errors.empty()) {
    try {
      c.validate();
    } catch (const std::exception& e) {
      errors.push_back(e.what());
    }
  }
  if (!errors.empty()) {
    std::string msg = "invalid configuration: ";
    for (std::size_t i = 0; i < errors.size(); ++i) msg += (i ? "; " : "") + errors[i];
    throw ConfigError(msg);
  }
  return c;
}

KeyValues to_key_values(const RunConfig& c) {
  return {
      {"env", to_string(c.env_id)},
      {"algorithm", to_string(c.algorithm)},
      {"total_steps", std::to_string(c.total_steps)},
      {"seed", std::to_string(c.seed)},
      {"eval_every", std::to_string(c.eval_every)},
      {"eval_episodes", std::to_string(c.eval_episodes)},
      {"eval_mode", c.eval_mode == EvalMode::actor ? "actor" : "mixed"},
      {"output_dir", c.output_dir},
      {"expert", c.expert_source.describe()},
      {"schedule.shape", to_string(c.schedule.shape)},
      {"schedule.t_change", std::to_string(c.schedule.t_change)},
      {"schedule.constant_value", format_double(c.schedule.constant_value)},
      {"td3.gamma", format_double(c.td3.gamma)},
      {"td3.tau", format_double(c.td3.tau)},
      {"td3.policy_delay", std::to_string(c.td3.policy_delay)},
      {"td3.exploration_noise_std", format_double(c.td3.exploration_noise_std)},
      {"td3.target_noise_std", format_double(c.td3.target_noise_std)},
      {"td3.target_noise_clip", format_double(c.td3.target_noise_clip)},
      {"td3.batch_size", std::to_string(c.td3.batch_size)},
      {"td3.learning_rate", format_double(c.td3.learning_rate)},
      {"td3.learning_starts", std::to_string(c.td3.learning_starts)},
      {"td3.hidden", join_ints(c.td3.hidden)},
      {"random_warmup", c.random_warmup ? "true" : "false"},
      {"updates_per_step", std::to_string(c.updates_per_step)},
      {"replay_capacity", std::to_string(c.replay_capacity)},
      {"record_trajectory_steps", std::to_string(c.record_trajectory_steps)},
  };
}

}  // namespace dai
