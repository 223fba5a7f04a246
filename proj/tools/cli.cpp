#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "dai/agents.hpp"
#include "dai/config.hpp"
#include "dai/diagnostics.hpp"
#include "dai/error.hpp"
#include "dai/harness.hpp"
#include "dai/report.hpp"
#include "json.hpp"

namespace dai::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string default_output_root() {
  const char* root = std::getenv("DAI_OUTPUT_ROOT");
  return root && *root ? root : "runs";
}

namespace {

json stats_json(const ReturnStats& s) {
  return json{{"mean", s.mean},   {"median", s.median}, {"std", s.std},     {"min", s.min},
              {"max", s.max},     {"ci_lo", s.ci_lo},   {"ci_hi", s.ci_hi}, {"episodes", s.returns.size()}};
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) seeds.push_back(parse_u64(item, "--seeds"));
  if (seeds.empty()) throw ConfigError("--seeds: empty seed list");
  return seeds;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
}

// Trains one run into `dir`, refusing to touch an existing run directory.
void train_one(RunConfig config, const std::string& dir, std::int64_t checkpoint_every) {
  if (fs::exists(fs::path(dir) / "metrics.csv"))
    throw IoError("run directory '" + dir + "' already holds a run (run directories are append-only)");
  config.output_dir = dir;
  fs::create_directories(dir);
  Trainer trainer(config);
  while (!trainer.finished()) {
    trainer.step();
    if (checkpoint_every > 0 && trainer.steps_done() % checkpoint_every == 0)
      trainer.save_checkpoint(dir + "/step_" + std::to_string(trainer.steps_done()) + ".ckpt");
  }
  write_run_outputs(dir, trainer);
  const auto& evals = trainer.metrics().evals;
  std::cout << json{{"run_dir", dir},
                    {"seed", config.seed},
                    {"final_eval_mean", evals.empty() ? 0.0 : evals.back().mean},
                    {"wall_seconds", trainer.metrics().wall_seconds}}
                   .dump()
            << "\n";
}

struct TrainOptions {
  std::string config_path;
  std::string manifest_path;
  std::string seeds;
  std::string out;
  std::string resume;
  std::vector<std::string> overrides;
  std::int64_t checkpoint_every = 0;
};

int run_train(const TrainOptions& o) {
  if (!o.resume.empty()) {
    Trainer trainer = Trainer::load_checkpoint(o.resume);
    const std::string dir = o.out.empty() ? trainer.config().output_dir : o.out;
    while (!trainer.finished()) {
      trainer.step();
      if (o.checkpoint_every > 0 && trainer.steps_done() % o.checkpoint_every == 0)
        trainer.save_checkpoint(dir + "/step_" + std::to_string(trainer.steps_done()) + ".ckpt");
    }
    write_run_outputs(dir, trainer);
    return 0;
  }
  if (!o.manifest_path.empty()) {
    const ExperimentManifest m = read_manifest(o.manifest_path);
    for (const auto& arm : m.arms) {
      for (std::uint64_t seed : m.seeds) {
        RunConfig c = arm.config;
        c.seed = seed;
        train_one(c, m.run_dir(arm.label, seed), o.checkpoint_every);
      }
    }
    return 0;
  }
  if (o.config_path.empty()) throw ConfigError("train needs --config, --manifest or --resume");
  KeyValues kv = read_key_values_file(o.config_path);
  const KeyValues overrides = parse_overrides(o.overrides);
  kv.insert(kv.end(), overrides.begin(), overrides.end());
  const RunConfig base = run_config_from(kv);
  std::string out = o.out;
  if (out.empty()) out = base.output_dir;
  if (out.empty()) out = (fs::path(default_output_root()) / fs::path(o.config_path).stem()).string();
  const auto seeds = o.seeds.empty() ? std::vector<std::uint64_t>{base.seed} : parse_seeds(o.seeds);
  for (std::uint64_t seed : seeds) {
    RunConfig c = base;
    c.seed = seed;
    train_one(c, (fs::path(out) / ("seed_" + std::to_string(seed))).string(), o.checkpoint_every);
  }
  return 0;
}

struct ExpertOptions {
  std::string env = "pendulum_swingup";
  std::string demos;
  std::string out;
  std::string expert = "scripted";
  bool evaluate = false;
  int episodes = 100;
  std::uint64_t seed = 0;
  int epochs = 300;
  int batch_size = 256;
  double learning_rate = 1e-3;
  std::vector<int> hidden{64, 64};
};

int run_expert(const ExpertOptions& o) {
  const EnvId env = env_id_from_string(o.env);
  const EnvSpec spec = EnvSpec::make(env);
  ExpertPolicy expert = resolve_expert(ExpertSource::parse(o.expert), spec);
  json result = json::object();
  if (!o.demos.empty()) {
    if (o.out.empty()) throw ConfigError("expert --demos needs --out for the cloned network");
    const auto [header, demos] = read_demo_file(o.demos);
    if (header.env_id != o.env)
      throw ConfigError("demo file '" + o.demos + "' was recorded on " + header.env_id + ", not " + o.env);
    Rng rng = Rng::stream(o.seed, "bc");
    const BcResult bc = bc_train(demos, actor_network_spec(spec, o.hidden), spec,
                                 {o.epochs, o.batch_size, o.learning_rate}, rng);
    save_network(o.out, *bc.expert.cloned_params, o.env);
    result["cloned_expert"] = o.out;
    result["final_mse"] = bc.final_mse;
    result["pairs"] = demos.size();
    expert = bc.expert;
  } else if (!o.evaluate) {
    throw ConfigError("expert needs --demos (behavior cloning) or --evaluate");
  }
  if (o.evaluate) result["evaluation"] = stats_json(evaluate(expert_policy(expert, spec), env, o.episodes, o.seed));
  std::cout << result.dump() << "\n";
  return 0;
}

int run_collect(const std::string& env, const std::string& expert_text, int episodes, std::uint64_t seed,
                const std::string& out) {
  const EnvSpec spec = EnvSpec::make(env_id_from_string(env));
  const ExpertPolicy expert = resolve_expert(ExpertSource::parse(expert_text), spec);
  if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
  const CollectSummary s = collect_demonstrations(expert, spec.env_id, episodes, seed, out);
  std::cout << json{{"out", out}, {"pairs", s.pairs}, {"mean_return", s.mean_return}}.dump() << "\n";
  return 0;
}

int run_eval(const std::string& checkpoint, int episodes, std::uint64_t seed, const std::string& mode, double alpha) {
  const Trainer trainer = Trainer::load_checkpoint(checkpoint);
  Policy policy;
  if (mode == "actor")
    policy = actor_policy(trainer.agent());
  else if (mode == "mixed")
    policy = mixed_policy(trainer.expert(), trainer.agent(), alpha);
  else
    throw ConfigError("--mode: expected actor or mixed");
  const ReturnStats s = evaluate(policy, trainer.config().env_id, episodes, seed);
  json out = stats_json(s);
  out["checkpoint"] = checkpoint;
  out["step"] = trainer.steps_done();
  std::cout << out.dump() << "\n";
  return 0;
}

struct DiagOptions {
  std::vector<std::string> trajectories;
  double gamma = 0.99;
  std::string out;
  int bins = 32;
  // sweep mode
  bool sweep = false;
  std::string checkpoint;
  int episodes = 20;
  std::uint64_t seed = 0;
};

std::string schedule_text(double alpha) { return "constant:" + format_double(alpha); }

int run_diag(DiagOptions o) {
  if (o.out.empty()) o.out = (fs::path(default_output_root()) / "diag").string();
  fs::create_directories(o.out);
  std::string text;

  if (o.sweep) {
    if (o.checkpoint.empty()) throw ConfigError("diag --sweep needs --checkpoint");
    const Trainer trainer = Trainer::load_checkpoint(o.checkpoint);
    const EnvId env = trainer.config().env_id;
    const std::string env_name = to_string(env);
    auto record = [&](const std::string& label, const Policy& policy, const std::string& schedule) {
      const std::string path = (fs::path(o.out) / (label + ".traj")).string();
      write_trajectory_file(path, {env_name, label, schedule, o.seed, o.gamma},
                            record_episodes(policy, env, o.episodes, o.seed));
      o.trajectories.push_back(path);
    };
    record("expert", expert_policy(trainer.expert(), trainer.env_spec()), schedule_text(0.0));
    record("rl", actor_policy(trainer.agent()), schedule_text(1.0));
    for (double alpha : {0.0, 0.25, 0.5, 0.75, 1.0})
      record("mixed_" + format_double(alpha), mixed_policy(trainer.expert(), trainer.agent(), alpha),
             schedule_text(alpha));
    const ValueErrorReport ve = critic_value_error(
        trainer.agent(), record_episodes(actor_policy(trainer.agent()), env, o.episodes, o.seed), o.gamma,
        "actor_on_policy");
    write_text((fs::path(o.out) / "value_error.csv").string(),
               "label,mse,samples,gamma\n" + ve.label + "," + format_double(ve.mse) + "," +
                   std::to_string(ve.samples) + "," + format_double(ve.gamma) + "\n");
    text += "critic value error (" + ve.label + "): mse=" + format_double(ve.mse) + " over " +
            std::to_string(ve.samples) + " states\n";
  }
  if (o.trajectories.empty()) throw ConfigError("diag needs --trajectories or --sweep");

  struct Loaded {
    std::string path;
    TrajectoryFileHeader header;
    VisitationHistogram histogram;
  };
  std::vector<Loaded> loaded;
  std::string summary = "file,policy_label,schedule,episodes,high_value_fraction,dropped_mass,clamped_states\n";
  for (const auto& path : o.trajectories) {
    auto [header, trajs] = read_trajectory_file(path);
    const EnvId env = env_id_from_string(header.env_id);
    VisitationHistogram h = estimate_visitation(trajs, o.gamma, Binning::for_env(env, o.bins));
    const double hv = high_value_fraction(trajs, HighValueSet::for_env(env), o.gamma);
    const std::string stem = fs::path(path).stem().string();
    write_text((fs::path(o.out) / ("visitation_" + stem + ".csv")).string(), histogram_csv(h));
    summary += path + "," + header.policy_label + "," + header.schedule + "," + std::to_string(trajs.size()) + "," +
               format_double(hv) + "," + format_double(h.dropped_mass) + "," + std::to_string(h.clamped_states) + "\n";
    text += stem + ": label=" + header.policy_label + " episodes=" + std::to_string(trajs.size()) +
            " high-value fraction=" + format_double(hv) + " dropped tail mass=" + format_double(h.dropped_mass) +
            " clamped states=" + std::to_string(h.clamped_states) + "\n";
    loaded.push_back({path, header, std::move(h)});
  }
  write_text((fs::path(o.out) / "summary.csv").string(), summary);

  // Mixture gaps need an "expert" file, an "rl" file and mixed files at constant alpha.
  const Loaded* expert = nullptr;
  const Loaded* rl = nullptr;
  for (const auto& l : loaded) {
    if (l.header.policy_label == "expert") expert = &l;
    if (l.header.policy_label == "rl") rl = &l;
  }
  if (expert && rl) {
    std::string gaps = "alpha,tv_distance\n";
    for (const auto& l : loaded) {
      if (l.header.schedule.rfind("constant:", 0) != 0 || l.header.policy_label.rfind("mixed", 0) != 0) continue;
      const double alpha = parse_double(l.header.schedule.substr(9), "schedule");
      const double tv = mixture_gap(l.histogram, expert->histogram, rl->histogram, alpha);
      gaps += format_double(alpha) + "," + format_double(tv) + "\n";
      text += "mixture gap at alpha=" + format_double(alpha) + ": TV=" + format_double(tv) + "\n";
    }
    write_text((fs::path(o.out) / "mixture_gaps.csv").string(), gaps);
  }
  write_text((fs::path(o.out) / "summary.txt").string(), text);
  std::cout << text;
  return 0;
}

int run_report(const std::string& manifest_path, std::string out) {
  const ExperimentManifest m = read_manifest(manifest_path);
  if (out.empty()) out = (fs::path(default_output_root()) / "report").string();
  const ArmResults results = load_manifest_results(m);
  double expert_return = 0.0;
  if (m.expert_return) {
    expert_return = *m.expert_return;
  } else {
    const EnvSpec spec = EnvSpec::make(m.arms.front().config.env_id);
    expert_return = evaluate(expert_policy(ExpertPolicy::scripted(), spec), spec.env_id, 100, 0).mean;
  }
  const Report r = build_report(m, results, expert_return);
  write_report(r, out);
  std::cout << json{{"out", out}, {"early_step", r.early_step}, {"final_step", r.final_step},
                    {"expert_return", expert_return}}
                   .dump()
            << "\n";
  return 0;
}

}  // namespace

int parse_and_dispatch(int argc, const char* const* argv) {
  CLI::App app{"Dynamic action interpolation laboratory"};
  app.require_subcommand(1);

  ExpertOptions expert_opts;
  auto* expert = app.add_subcommand("expert", "Behavior-clone an expert from demos, or evaluate an expert");
  expert->add_option("--env", expert_opts.env, "Environment id");
  expert->add_option("--demos", expert_opts.demos, "Demo file to clone from");
  expert->add_option("--out", expert_opts.out, "Where to write the cloned network");
  expert->add_flag("--evaluate", expert_opts.evaluate, "Evaluate the (scripted or cloned) expert");
  expert->add_option("--expert", expert_opts.expert, "scripted | cloned:<path> (for --evaluate)");
  expert->add_option("--episodes", expert_opts.episodes, "Evaluation episodes");
  expert->add_option("--seed", expert_opts.seed, "Seed for cloning and evaluation");
  expert->add_option("--epochs", expert_opts.epochs, "Behavior-cloning epochs");
  expert->add_option("--batch-size", expert_opts.batch_size, "Behavior-cloning batch size");
  expert->add_option("--lr", expert_opts.learning_rate, "Behavior-cloning learning rate");
  expert->add_option("--hidden", expert_opts.hidden, "Hidden widths")->delimiter(',');

  std::string collect_env = "pendulum_swingup", collect_expert = "scripted", collect_out;
  int collect_episodes = 20;
  std::uint64_t collect_seed = 0;
  auto* collect = app.add_subcommand("collect", "Roll out an expert and write a demo file");
  collect->add_option("--env", collect_env, "Environment id");
  collect->add_option("--expert", collect_expert, "scripted | cloned:<path>");
  collect->add_option("--episodes", collect_episodes, "Episodes to record");
  collect->add_option("--seed", collect_seed, "First reset seed");
  collect->add_option("--out", collect_out, "Demo file")->required();

  TrainOptions train_opts;
  auto* train = app.add_subcommand("train", "Run training (one directory per seed)");
  train->add_option("--config", train_opts.config_path, "Run configuration (key = value)");
  train->add_option("--manifest", train_opts.manifest_path, "Train every arm and seed of a manifest");
  train->add_option("--seed,--seeds", train_opts.seeds, "Seed or comma-separated seed list");
  train->add_option("--out", train_opts.out, "Output directory");
  train->add_option("--set", train_opts.overrides, "key=value override (repeatable)");
  train->add_option("--checkpoint-every", train_opts.checkpoint_every, "Write step_<t>.ckpt every N steps");
  train->add_option("--resume", train_opts.resume, "Continue a run from a checkpoint");

  std::string eval_checkpoint, eval_mode = "actor";
  int eval_episodes = 10;
  std::uint64_t eval_seed = 0;
  double eval_alpha = 1.0;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint noiselessly");
  eval->add_option("--checkpoint", eval_checkpoint, "Trainer checkpoint")->required();
  eval->add_option("--episodes", eval_episodes, "Episodes");
  eval->add_option("--seed", eval_seed, "First reset seed");
  eval->add_option("--mode", eval_mode, "actor | mixed");
  eval->add_option("--alpha", eval_alpha, "Interpolation weight for --mode mixed");

  DiagOptions diag_opts;
  auto* diag = app.add_subcommand("diag", "Visitation, high-value and mixture diagnostics");
  diag->add_option("--trajectories", diag_opts.trajectories, "Trajectory files");
  diag->add_option("--gamma", diag_opts.gamma, "Discount for visitation weights");
  diag->add_option("--out", diag_opts.out, "Output directory");
  diag->add_option("--bins", diag_opts.bins, "Bins per projected dimension");
  diag->add_flag("--sweep", diag_opts.sweep, "Record expert, actor and alpha-sweep rollouts from --checkpoint");
  diag->add_option("--checkpoint", diag_opts.checkpoint, "Trainer checkpoint for --sweep");
  diag->add_option("--episodes", diag_opts.episodes, "Episodes per policy for --sweep");
  diag->add_option("--seed", diag_opts.seed, "First reset seed for --sweep");

  std::string report_manifest, report_out;
  auto* report = app.add_subcommand("report", "Aggregate a manifest's runs into tables and plots");
  report->add_option("--manifest", report_manifest, "Experiment manifest")->required();
  report->add_option("--out", report_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help();
    std::cerr << "error: usage: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*expert) return run_expert(expert_opts);
    if (*collect) return run_collect(collect_env, collect_expert, collect_episodes, collect_seed, collect_out);
    if (*train) return run_train(train_opts);
    if (*eval) return run_eval(eval_checkpoint, eval_episodes, eval_seed, eval_mode, eval_alpha);
    if (*diag) return run_diag(diag_opts);
    if (*report) return run_report(report_manifest, report_out);
  } catch (const ConfigError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: io: " << e.what() << "\n";
    return 1;
  } catch (const FormatError& e) {
    std::cerr << "error: format: " << e.what() << "\n";
    return 1;
  } catch (const ContractViolation& e) {
    std::cerr << "error: contract: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: runtime: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int parse_and_dispatch(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("dai");
  for (const auto& a : args) argv.push_back(a.c_str());
  return parse_and_dispatch(static_cast<int>(argv.size()), argv.data());
}

}  // namespace dai::cli
