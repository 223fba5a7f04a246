#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dai/harness.hpp"

namespace dai {

enum class OutlierFilter { off, per_run, per_step };

/// Multi-seed comparison study. Manifest files are key=value documents:
///
///   seeds = 1,2,3,4,5
///   runs_root = runs/pendulum          # relative to the manifest file
///   arm.td3 = td3.cfg                  # one line per arm, label = arm name
///   arm.td3_dai = dai.cfg
///   early_fraction = 0.25              # optional
///   expert_return = -180.5             # optional, else the scripted expert is evaluated
///   outliers = off | per_run | per_step
struct ManifestArm {
  std::string label;
  RunConfig config;
};

struct ExperimentManifest {
  std::vector<ManifestArm> arms;
  std::vector<std::uint64_t> seeds;
  std::string runs_root;
  double early_fraction = 0.25;
  std::optional<double> expert_return;
  OutlierFilter outliers = OutlierFilter::off;

  /// Run directory of one arm and seed.
  std::string run_dir(const std::string& label, std::uint64_t seed) const;
  void validate() const;
};

ExperimentManifest read_manifest(const std::string& path);

/// Per arm, per seed, the evaluation log of that run.
using ArmResults = std::map<std::string, std::vector<std::vector<EvalLog>>>;

/// Reads every run's metrics.csv; a missing run is an error naming arm and seed.
ArmResults load_manifest_results(const ExperimentManifest& manifest);

struct CurvePoint {
  std::int64_t step = 0;
  double median = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::size_t seeds = 0;
};

struct TableRow {
  std::string arm;
  std::int64_t step = 0;
  double mean = 0.0;
  double std = 0.0;
  double median = 0.0;
  std::size_t seeds = 0;
};

struct PairDelta {
  std::string arm_a;
  std::string arm_b;
  double early_median_delta = 0.0;  // a - b
  double final_median_delta = 0.0;
  double early_mean_delta = 0.0;
  double final_mean_delta = 0.0;
};

struct PlotBounds {
  double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
};

struct Report {
  std::map<std::string, std::vector<CurvePoint>> curves;
  std::vector<TableRow> early_table;
  std::vector<TableRow> final_table;
  std::vector<PairDelta> deltas;
  std::int64_t early_step = 0;
  std::int64_t final_step = 0;
  double expert_return = 0.0;
  PlotBounds bounds;
};

/// Seed used for every bootstrap in reports.
inline constexpr std::uint64_t kReportBootstrapSeed = 20240601;

/// Step of the early-performance table: the eval step at or below
/// round(fraction * total_steps).
std::int64_t early_table_step(std::int64_t total_steps, double fraction,
                              const std::vector<std::int64_t>& eval_steps);

/// Values outside [Q1 - 1.5 IQR, Q3 + 1.5 IQR] are flagged.
std::vector<bool> iqr_outliers(const std::vector<double>& values);

Report build_report(const ExperimentManifest& manifest, const ArmResults& results, double expert_return);

/// Writes learning_curves.csv, early_table.csv, final_table.csv, deltas.csv and
/// learning_curves.svg into `out_dir`.
void write_report(const Report& report, const std::string& out_dir);

std::string render_svg(const Report& report);

}  // namespace dai
