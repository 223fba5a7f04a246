#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>

#include "dai/config.hpp"
#include "dai/error.hpp"
#include "dai/harness.hpp"
#include "dai/trajectory.hpp"

using namespace dai;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dai_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Small but complete configuration: warmup, learning and a few evaluations.
RunConfig small_config(Algorithm algorithm, std::uint64_t seed = 3) {
  RunConfig c = default_run_config(algorithm, EnvId::pendulum_swingup, 1200);
  c.seed = seed;
  c.td3.hidden = {16, 16};
  c.td3.batch_size = 32;
  c.td3.learning_starts = 300;
  c.eval_every = 400;
  c.eval_episodes = 2;
  c.schedule = ScheduleSpec::linear(600);
  return c;
}

}  // namespace

TEST(Trainer, LearningGate) {
  RunConfig c = small_config(Algorithm::td3);
  c.total_steps = c.td3.learning_starts;
  Trainer t(c);
  t.run();
  EXPECT_EQ(t.gradient_updates(), 0);
  EXPECT_EQ(t.replay().size(), static_cast<std::size_t>(c.total_steps));
}

TEST(Trainer, OneUpdatePerStepAfterWarmup) {
  RunConfig c = small_config(Algorithm::td3_dai);
  Trainer t(c);
  t.run();
  EXPECT_EQ(t.gradient_updates(), c.total_steps - c.td3.learning_starts);
  EXPECT_EQ(t.metrics().evals.size(), 3u);
}

TEST(Trainer, IdenticalSeedsIdenticalMetrics) {
  const RunConfig c = small_config(Algorithm::td3_dai);
  const RunMetrics a = run_training(c);
  const RunMetrics b = run_training(c);
  EXPECT_EQ(a, b);
  EXPECT_EQ(metrics_csv_rows(a), metrics_csv_rows(b));
}

TEST(Trainer, ConstantOneScheduleEqualsBaseline) {
  RunConfig base = small_config(Algorithm::td3);
  RunConfig dai = base;
  dai.algorithm = Algorithm::td3_dai;
  dai.schedule = ScheduleSpec::constant(1.0);
  Trainer a(base), b(dai);
  a.run();
  b.run();
  EXPECT_EQ(a.metrics(), b.metrics());
  EXPECT_EQ(a.replay(), b.replay());
  EXPECT_EQ(a.agent(), b.agent());
}

TEST(Trainer, EvalEpisodesDoNotPerturbTraining) {
  RunConfig a = small_config(Algorithm::td3_dai);
  RunConfig b = a;
  b.eval_episodes = 5;
  Trainer ta(a), tb(b);
  ta.run();
  tb.run();
  EXPECT_EQ(ta.agent(), tb.agent());
  EXPECT_EQ(ta.replay(), tb.replay());
}

TEST(Trainer, StoresExecutedActions) {
  RunConfig c = small_config(Algorithm::td3_dai);
  c.total_steps = 50;
  c.schedule = ScheduleSpec::constant(0.0);
  c.td3.exploration_noise_std = 0.0;
  Trainer t(c);
  t.run();
  const EnvSpec spec = t.env_spec();
  for (std::size_t i = 0; i < t.replay().size(); ++i) {
    const Transition tr = t.replay().at(i);
    EXPECT_EQ(tr.action, scripted_expert_action(spec, tr.observation));
  }
}

TEST(Trainer, AlphaLoggedPerStep) {
  RunConfig c = small_config(Algorithm::td3_dai);
  c.total_steps = 700;
  Trainer t(c);
  t.run();
  ASSERT_EQ(t.metrics().steps.size(), 700u);
  EXPECT_EQ(t.metrics().steps[0].step, 1);
  EXPECT_EQ(t.metrics().steps[149].alpha, 0.25);
  EXPECT_EQ(t.metrics().steps[699].alpha, 1.0);
  EXPECT_TRUE(t.metrics().steps[199].episode_return.has_value());
}

TEST(Evaluate, SameSeedSameStatistics) {
  const EnvSpec spec = EnvSpec::make(EnvId::pendulum_swingup);
  const Policy p = expert_policy(ExpertPolicy::scripted(), spec);
  const ReturnStats a = evaluate(p, spec.env_id, 5, 10);
  const ReturnStats b = evaluate(p, spec.env_id, 5, 10);
  EXPECT_EQ(a.returns, b.returns);
  EXPECT_EQ(a.ci_lo, b.ci_lo);
  EXPECT_EQ(a.ci_hi, b.ci_hi);
}

TEST(Evaluate, ZeroForceAtRestOffGoal) {
  const EnvSpec spec = EnvSpec::make(EnvId::point_mass_2d);
  const Policy zero = [](const Observation&) { return Action(Action::Zero(2)); };
  const RolloutResult r = rollout(spec, point_mass_state(1.0, 0.0), zero);
  EXPECT_EQ(r.total_return, -200.0);
  EXPECT_EQ(r.trajectory.size(), 200u);
}

TEST(Evaluate, ConstantSampleHasZeroWidthInterval) {
  const auto [lo, hi] = bootstrap_median_ci(std::vector<double>(9, -42.5), 10000, 1);
  EXPECT_EQ(lo, -42.5);
  EXPECT_EQ(hi, -42.5);
}

TEST(Evaluate, SummaryStatistics) {
  const ReturnStats s = summarize_returns({-1, -2, -3, -4}, 0);
  EXPECT_EQ(s.mean, -2.5);
  EXPECT_EQ(s.median, -2.5);
  EXPECT_EQ(s.min, -4);
  EXPECT_EQ(s.max, -1);
  EXPECT_NEAR(s.std, std::sqrt(1.25), 1e-15);
  EXPECT_LE(s.ci_lo, s.median);
  EXPECT_GE(s.ci_hi, s.median);
}

TEST(Demos, TwentyEpisodesGiveFourThousandPairs) {
  const fs::path dir = scratch_dir("demos");
  const auto s1 = collect_demonstrations(ExpertPolicy::scripted(), EnvId::pendulum_swingup, 20, 7,
                                         (dir / "a.demo").string());
  collect_demonstrations(ExpertPolicy::scripted(), EnvId::pendulum_swingup, 20, 7, (dir / "b.demo").string());
  EXPECT_EQ(s1.pairs, 4000u);
  EXPECT_EQ(slurp(dir / "a.demo"), slurp(dir / "b.demo"));
  const auto [header, demos] = read_demo_file((dir / "a.demo").string());
  EXPECT_EQ(header.episodes, 20);
  EXPECT_EQ(header.obs_dim, 3);
  EXPECT_EQ(demos.size(), 4000);
  EXPECT_LE(demos.actions.cwiseAbs().maxCoeff(), 2.0);
}

TEST(Demos, UnwritablePathNamesThePath) {
  try {
    collect_demonstrations(ExpertPolicy::scripted(), EnvId::pendulum_swingup, 1, 0, "/nonexistent/dir/x.demo");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/x.demo"), std::string::npos);
  }
}

TEST(Checkpoint, RoundTripIsBitwise) {
  const fs::path dir = scratch_dir("ckpt");
  Trainer t(small_config(Algorithm::td3_dai));
  t.run_until(500);
  t.save_checkpoint((dir / "a.ckpt").string());
  const Trainer back = Trainer::load_checkpoint((dir / "a.ckpt").string());
  EXPECT_TRUE(t.same_state(back));
  EXPECT_EQ(back.agent(), t.agent());
  EXPECT_EQ(back.replay(), t.replay());
  EXPECT_EQ(back.steps_done(), 500);
}

TEST(Checkpoint, SplitRunMatchesUninterrupted) {
  const fs::path dir = scratch_dir("split");
  const RunConfig c = small_config(Algorithm::td3_dai);
  Trainer whole(c);
  whole.run();

  Trainer first(c);
  first.run_until(700);
  first.save_checkpoint((dir / "mid.ckpt").string());
  Trainer second = Trainer::load_checkpoint((dir / "mid.ckpt").string());
  second.run();

  EXPECT_TRUE(whole.same_state(second));
  EXPECT_EQ(whole.agent(), second.agent());
  // the resumed run only logs the remaining steps
  const auto& rest = second.metrics();
  ASSERT_FALSE(rest.steps.empty());
  EXPECT_EQ(rest.steps.front().step, 701);
  for (const auto& e : rest.evals) EXPECT_EQ(whole.metrics().eval_at(e.step), e);
}

TEST(Checkpoint, CorruptedMagicIsIncompatible) {
  const fs::path dir = scratch_dir("magic");
  Trainer t(small_config(Algorithm::td3));
  t.run_until(10);
  const auto path = (dir / "x.ckpt").string();
  t.save_checkpoint(path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(3);
    f.put('X');
  }
  try {
    Trainer::load_checkpoint(path);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("incompatible"), std::string::npos) << e.what();
  }
}

TEST(Checkpoint, TruncationIsCorruption) {
  const fs::path dir = scratch_dir("trunc");
  Trainer t(small_config(Algorithm::td3));
  t.run_until(10);
  const auto path = (dir / "x.ckpt").string();
  t.save_checkpoint(path);
  fs::resize_file(path, fs::file_size(path) - 100);
  try {
    Trainer::load_checkpoint(path);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("corrupt"), std::string::npos) << e.what();
  }
}

TEST(Outputs, MetricsCsvIsReproducibleAndParsable) {
  const fs::path dir = scratch_dir("outputs");
  const RunConfig c = small_config(Algorithm::td3_dai);
  for (const char* sub : {"a", "b"}) {
    Trainer t(c);
    t.run();
    write_run_outputs((dir / sub).string(), t);
  }
  EXPECT_EQ(slurp(dir / "a" / "metrics.csv"), slurp(dir / "b" / "metrics.csv"));
  EXPECT_EQ(slurp(dir / "a" / "metrics.csv").substr(0, metrics_csv_header().size()), metrics_csv_header());
  EXPECT_EQ(read_eval_log((dir / "a" / "metrics.csv").string()).size(), 3u);
  // config round trip: the echoed configuration rebuilds the same run
  const RunConfig echoed = run_config_from(read_key_values_file((dir / "a" / "config.resolved").string()));
  EXPECT_EQ(run_training(echoed), run_training(c));
}

TEST(Trajectories, FileRoundTrip) {
  const fs::path dir = scratch_dir("traj");
  const EnvSpec spec = EnvSpec::make(EnvId::pendulum_swingup);
  const auto trajs = record_episodes(expert_policy(ExpertPolicy::scripted(), spec), spec.env_id, 3, 4);
  const auto path = (dir / "e.traj").string();
  write_trajectory_file(path, {"pendulum_swingup", "expert", "constant:0", 4, 0.99}, trajs);
  const auto [header, back] = read_trajectory_file(path);
  EXPECT_EQ(header.policy_label, "expert");
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].projections, trajs[i].projections);
    EXPECT_EQ(back[i].rewards, trajs[i].rewards);
  }
}
