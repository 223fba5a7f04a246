#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "cli.hpp"
#include "dai/config.hpp"
#include "dai/error.hpp"
#include "dai/harness.hpp"
#include "dai/report.hpp"

using namespace dai;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dai_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

const char* kTinyConfig =
    "env = pendulum_swingup\n"
    "algorithm = td3_dai\n"
    "total_steps = 400\n"
    "eval_every = 200\n"
    "eval_episodes = 2\n"
    "td3.hidden = 8,8\n"
    "td3.batch_size = 16\n"
    "td3.learning_starts = 100\n";

std::vector<EvalLog> curve(double offset, std::initializer_list<std::int64_t> steps) {
  std::vector<EvalLog> out;
  for (auto s : steps) {
    const double v = offset + 0.001 * static_cast<double>(s);
    out.push_back({s, v, v, 0.0, v, v});
  }
  return out;
}

ExperimentManifest synthetic_manifest(std::vector<std::string> labels, std::vector<std::uint64_t> seeds) {
  ExperimentManifest m;
  m.seeds = std::move(seeds);
  for (auto& l : labels) {
    RunConfig c = default_run_config(Algorithm::td3, EnvId::pendulum_swingup, 40000);
    m.arms.push_back({l, c});
  }
  return m;
}

}  // namespace

TEST(Config, UnknownKeysAllReported) {
  KeyValues kv = parse_key_values(kTinyConfig, "tiny");
  kv.emplace_back("td3.gama", "0.9");
  kv.emplace_back("learning_rate", "1");
  kv.emplace_back("total_steps", "many");
  try {
    run_config_from(kv);
    FAIL();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("td3.gama"), std::string::npos) << msg;
    EXPECT_NE(msg.find("learning_rate"), std::string::npos) << msg;
    EXPECT_NE(msg.find("total_steps"), std::string::npos) << msg;
  }
}

TEST(Config, OverridesWinAndRoundTrip) {
  KeyValues kv = parse_key_values(kTinyConfig, "tiny");
  const auto o = parse_overrides({"seed=9", "schedule.shape=cosine"});
  kv.insert(kv.end(), o.begin(), o.end());
  const RunConfig c = run_config_from(kv);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.schedule.shape, ScheduleShape::cosine);
  EXPECT_EQ(c.schedule.t_change, 200);
  EXPECT_FALSE(c.random_warmup);
  EXPECT_EQ(run_config_from(to_key_values(c)), c);
}

TEST(Config, FormatDoubleRoundTrips) {
  for (double v : {0.1, 3e-4, -1234.5678901234567, 1e-300})
    EXPECT_EQ(parse_double(format_double(v), "x"), v);
}

TEST(Cli, UnknownSubcommandIsUsageError) {
  EXPECT_NE(cli::parse_and_dispatch({"frobnicate"}), 0);
  EXPECT_NE(cli::parse_and_dispatch(std::vector<std::string>{}), 0);
}

TEST(Cli, MissingFileIsError) {
  EXPECT_NE(cli::parse_and_dispatch({"eval", "--checkpoint", "/no/such/file.ckpt"}), 0);
}

TEST(Cli, TrainFansOutOverSeeds) {
  const fs::path dir = scratch_dir("fanout");
  write(dir / "tiny.cfg", kTinyConfig);
  const fs::path out = dir / "runs";
  ASSERT_EQ(cli::parse_and_dispatch({"train", "--config", (dir / "tiny.cfg").string(), "--seeds", "1,2,3", "--out",
                                     out.string()}),
            0);
  for (int s : {1, 2, 3}) {
    const fs::path run = out / ("seed_" + std::to_string(s));
    EXPECT_TRUE(fs::exists(run / "metrics.csv"));
    EXPECT_TRUE(fs::exists(run / "final.ckpt"));
    EXPECT_EQ(run_config_from(read_key_values_file((run / "config.resolved").string())).seed,
              static_cast<std::uint64_t>(s));
  }
  // run directories are append-only
  EXPECT_NE(cli::parse_and_dispatch({"train", "--config", (dir / "tiny.cfg").string(), "--seeds", "1", "--out",
                                     out.string()}),
            0);
}

TEST(Cli, UnknownOverrideRejected) {
  const fs::path dir = scratch_dir("badkey");
  write(dir / "tiny.cfg", kTinyConfig);
  EXPECT_NE(cli::parse_and_dispatch({"train", "--config", (dir / "tiny.cfg").string(), "--set", "bogus=1", "--out",
                                     (dir / "runs").string()}),
            0);
  EXPECT_FALSE(fs::exists(dir / "runs"));
}

TEST(Cli, ReportOverIdenticalArmsHasZeroDeltas) {
  const fs::path dir = scratch_dir("report");
  write(dir / "tiny.cfg", kTinyConfig);
  write(dir / "study.manifest",
        "seeds = 4,5\nruns_root = runs\narm.first = tiny.cfg\narm.second = tiny.cfg\nexpert_return = -180\n");
  ASSERT_EQ(cli::parse_and_dispatch({"train", "--manifest", (dir / "study.manifest").string()}), 0);
  ASSERT_EQ(cli::parse_and_dispatch({"report", "--manifest", (dir / "study.manifest").string(), "--out",
                                     (dir / "report").string()}),
            0);
  const Report r = build_report(read_manifest((dir / "study.manifest").string()),
                                load_manifest_results(read_manifest((dir / "study.manifest").string())), -180);
  ASSERT_EQ(r.deltas.size(), 1u);
  EXPECT_EQ(r.deltas[0].early_median_delta, 0.0);
  EXPECT_EQ(r.deltas[0].final_median_delta, 0.0);
  EXPECT_EQ(r.deltas[0].early_mean_delta, 0.0);
  EXPECT_EQ(r.deltas[0].final_mean_delta, 0.0);
  for (const char* f : {"learning_curves.csv", "early_table.csv", "final_table.csv", "deltas.csv",
                        "learning_curves.svg"})
    EXPECT_TRUE(fs::exists(dir / "report" / f)) << f;
  // byte-identical on a second pass
  ASSERT_EQ(cli::parse_and_dispatch({"report", "--manifest", (dir / "study.manifest").string(), "--out",
                                     (dir / "report2").string()}),
            0);
  EXPECT_EQ(slurp(dir / "report" / "learning_curves.csv"), slurp(dir / "report2" / "learning_curves.csv"));
}

TEST(Cli, DiagSweepWritesArtifacts) {
  const fs::path dir = scratch_dir("diag");
  write(dir / "tiny.cfg", kTinyConfig);
  ASSERT_EQ(cli::parse_and_dispatch({"train", "--config", (dir / "tiny.cfg").string(), "--seeds", "1", "--out",
                                     (dir / "runs").string()}),
            0);
  ASSERT_EQ(cli::parse_and_dispatch({"diag", "--sweep", "--checkpoint", (dir / "runs/seed_1/final.ckpt").string(),
                                     "--episodes", "3", "--out", (dir / "diag").string()}),
            0);
  EXPECT_TRUE(fs::exists(dir / "diag" / "mixture_gaps.csv"));
  EXPECT_TRUE(fs::exists(dir / "diag" / "summary.txt"));
  EXPECT_TRUE(fs::exists(dir / "diag" / "value_error.csv"));
}

TEST(Cli, OutputRootFromEnvironment) {
  ::setenv("DAI_OUTPUT_ROOT", "/tmp/somewhere", 1);
  EXPECT_EQ(cli::default_output_root(), "/tmp/somewhere");
  ::unsetenv("DAI_OUTPUT_ROOT");
  EXPECT_EQ(cli::default_output_root(), "runs");
}

TEST(Report, EarlyStepAtQuarterBudget) {
  std::vector<std::int64_t> steps;
  for (std::int64_t s = 1000; s <= 40000; s += 1000) steps.push_back(s);
  EXPECT_EQ(early_table_step(40000, 0.25, steps), 10000);
}

TEST(Report, SingleSeedBandCollapses) {
  const auto m = synthetic_manifest({"only"}, {1});
  ArmResults res{{"only", {curve(-500, {10000, 20000, 30000, 40000})}}};
  const Report r = build_report(m, res, -150);
  for (const auto& p : r.curves.at("only")) {
    EXPECT_EQ(p.ci_lo, p.median);
    EXPECT_EQ(p.ci_hi, p.median);
  }
}

TEST(Report, AxisBoundsCoverBothArms) {
  const auto m = synthetic_manifest({"low", "high"}, {1, 2});
  ArmResults res{{"low", {curve(-1500, {10000, 40000}), curve(-1400, {10000, 40000})}},
                 {"high", {curve(-200, {10000, 40000}), curve(-100, {10000, 40000})}}};
  const Report r = build_report(m, res, -150);
  EXPECT_LE(r.bounds.y_min, -1500 + 10.0);
  EXPECT_GE(r.bounds.y_max, -100 + 40.0);
  EXPECT_LE(r.bounds.x_min, 10000);
  EXPECT_GE(r.bounds.x_max, 40000);
}

TEST(Report, MissingSeedNamed) {
  const auto m = synthetic_manifest({"a"}, {1, 2});
  ArmResults res{{"a", {curve(0, {10000, 40000})}}};
  try {
    build_report(m, res, 0);
    FAIL();
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("'a'"), std::string::npos) << e.what();
  }
}

TEST(Report, IqrFence) {
  const auto flags = iqr_outliers({1, 2, 3, 4, 100});
  EXPECT_EQ(flags, (std::vector<bool>{false, false, false, false, true}));
}
