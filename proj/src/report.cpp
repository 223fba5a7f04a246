#include "dai/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dai/config.hpp"
#include "dai/error.hpp"

namespace dai {

namespace fs = std::filesystem;

namespace {

constexpr int kReportResamples = 10000;

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(' '));
    item.erase(item.find_last_not_of(' ') + 1);
    seeds.push_back(parse_u64(item, "seeds"));
  }
  return seeds;
}

const EvalLog* find_step(const std::vector<EvalLog>& log, std::int64_t step) {
  for (const auto& e : log)
    if (e.step == step) return &e;
  return nullptr;
}

TableRow table_row(const std::string& arm, std::int64_t step, const std::vector<double>& v) {
  return {arm, step, mean_of(v), std_of(v), median_of(v), v.size()};
}

}  // namespace

std::string ExperimentManifest::run_dir(const std::string& label, std::uint64_t seed) const {
  return (fs::path(runs_root) / label / ("seed_" + std::to_string(seed))).string();
}

void ExperimentManifest::validate() const {
  if (arms.empty()) throw ConfigError("manifest defines no arms");
  if (seeds.empty()) throw ConfigError("manifest defines no seeds");
  if (!(early_fraction > 0.0 && early_fraction <= 1.0))
    throw ConfigError("manifest early_fraction must lie in (0, 1]");
  for (const auto& arm : arms) {
    if (arm.config.env_id != arms.front().config.env_id ||
        arm.config.total_steps != arms.front().config.total_steps)
      throw ConfigError("manifest arm '" + arm.label + "' differs from '" + arms.front().label +
                        "' in env or total_steps");
  }
}

ExperimentManifest read_manifest(const std::string& path) {
  const KeyValues kv = read_key_values_file(path);
  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    return fs::path(p).is_absolute() ? p : (base / p).lexically_normal().string();
  };
  ExperimentManifest m;
  std::vector<std::string> errors;
  for (const auto& [k, v] : kv) {
    try {
      if (k == "seeds") {
        m.seeds = parse_seed_list(v);
      } else if (k == "runs_root") {
        m.runs_root = resolve(v);
      } else if (k == "early_fraction") {
        m.early_fraction = parse_double(v, k);
      } else if (k == "expert_return") {
        m.expert_return = parse_double(v, k);
      } else if (k == "outliers") {
        if (v == "off") m.outliers = OutlierFilter::off;
        else if (v == "per_run") m.outliers = OutlierFilter::per_run;
        else if (v == "per_step") m.outliers = OutlierFilter::per_step;
        else throw ConfigError("outliers: expected off, per_run or per_step");
      } else if (k.rfind("arm.", 0) == 0 && k.size() > 4) {
        m.arms.push_back({k.substr(4), run_config_from(read_key_values_file(resolve(v)))});
      } else {
        throw ConfigError("unknown manifest key '" + k + "'");
      }
    } catch (const std::exception& e) {
      errors.push_back(e.what());
    }
  }
  if (m.runs_root.empty()) m.runs_root = (base / "runs").string();
  if (!errors.empty()) {
    std::string msg = path + ": ";
    for (std::size_t i = 0; i < errors.size(); ++i) msg += (i ? "; " : "") + errors[i];
    throw ConfigError(msg);
  }
  m.validate();
  return m;
}

ArmResults load_manifest_results(const ExperimentManifest& manifest) {
  ArmResults results;
  for (const auto& arm : manifest.arms) {
    auto& per_seed = results[arm.label];
    for (std::uint64_t seed : manifest.seeds) {
      const std::string csv = manifest.run_dir(arm.label, seed) + "/metrics.csv";
      if (!fs::exists(csv))
        throw IoError("missing seed data: arm '" + arm.label + "' seed " + std::to_string(seed) + " (" + csv + ")");
      per_seed.push_back(read_eval_log(csv));
    }
  }
  return results;
}

std::int64_t early_table_step(std::int64_t total_steps, double fraction,
                              const std::vector<std::int64_t>& eval_steps) {
  require(!eval_steps.empty(), "no evaluation steps");
  const auto wanted = static_cast<std::int64_t>(std::llround(fraction * static_cast<double>(total_steps)));
  std::int64_t best = eval_steps.front();
  for (auto s : eval_steps)
    if (s <= wanted && s > best) best = s;
  return best;
}

std::vector<bool> iqr_outliers(const std::vector<double>& values) {
  std::vector<bool> flags(values.size(), false);
  if (values.size() < 4) return flags;
  const double q1 = quantile(values, 0.25);
  const double q3 = quantile(values, 0.75);
  const double fence = 1.5 * (q3 - q1);
  for (std::size_t i = 0; i < values.size(); ++i)
    flags[i] = values[i] < q1 - fence || values[i] > q3 + fence;
  return flags;
}

Report build_report(const ExperimentManifest& manifest, const ArmResults& results, double expert_return) {
  manifest.validate();
  Report r;
  r.expert_return = expert_return;
  r.final_step = manifest.arms.front().config.total_steps;

  std::set<std::int64_t> step_set;
  for (const auto& arm : manifest.arms) {
    const auto it = results.find(arm.label);
    if (it == results.end()) throw IoError("missing seed data: arm '" + arm.label + "' has no results");
    if (it->second.size() != manifest.seeds.size())
      throw IoError("missing seed data: arm '" + arm.label + "' has " + std::to_string(it->second.size()) +
                    " of " + std::to_string(manifest.seeds.size()) + " seeds");
    for (const auto& e : it->second.front()) step_set.insert(e.step);
  }
  const std::vector<std::int64_t> steps(step_set.begin(), step_set.end());
  r.early_step = early_table_step(r.final_step, manifest.early_fraction, steps);

  // Values of every seed at `step`, after the configured outlier filter.
  auto values_at = [&](const std::string& label, std::int64_t step, const std::vector<bool>& dropped) {
    const auto& per_seed = results.at(label);
    std::vector<double> v;
    for (std::size_t s = 0; s < per_seed.size(); ++s) {
      if (dropped[s]) continue;
      const EvalLog* e = find_step(per_seed[s], step);
      if (!e)
        throw IoError("missing seed data: arm '" + label + "' seed " + std::to_string(manifest.seeds[s]) +
                      " has no evaluation at step " + std::to_string(step));
      v.push_back(e->mean);
    }
    if (manifest.outliers == OutlierFilter::per_step) {
      const auto flags = iqr_outliers(v);
      std::vector<double> kept;
      for (std::size_t i = 0; i < v.size(); ++i)
        if (!flags[i]) kept.push_back(v[i]);
      v = std::move(kept);
    }
    return v;
  };

  std::map<std::string, std::vector<bool>> dropped;
  for (const auto& arm : manifest.arms) {
    std::vector<bool> none(manifest.seeds.size(), false);
    dropped[arm.label] = none;
    if (manifest.outliers == OutlierFilter::per_run)
      dropped[arm.label] = iqr_outliers(values_at(arm.label, r.final_step, none));
  }

  double y_min = expert_return, y_max = expert_return;
  for (const auto& arm : manifest.arms) {
    auto& curve = r.curves[arm.label];
    for (std::int64_t step : steps) {
      const auto v = values_at(arm.label, step, dropped[arm.label]);
      const auto [lo, hi] = bootstrap_median_ci(v, kReportResamples, kReportBootstrapSeed);
      curve.push_back({step, median_of(v), lo, hi, v.size()});
      y_min = std::min({y_min, lo, curve.back().median});
      y_max = std::max({y_max, hi, curve.back().median});
    }
    r.early_table.push_back(table_row(arm.label, r.early_step, values_at(arm.label, r.early_step, dropped[arm.label])));
    r.final_table.push_back(table_row(arm.label, r.final_step, values_at(arm.label, r.final_step, dropped[arm.label])));
  }
  for (std::size_t a = 0; a < manifest.arms.size(); ++a) {
    for (std::size_t b = a + 1; b < manifest.arms.size(); ++b) {
      PairDelta d;
      d.arm_a = manifest.arms[a].label;
      d.arm_b = manifest.arms[b].label;
      d.early_median_delta = r.early_table[a].median - r.early_table[b].median;
      d.final_median_delta = r.final_table[a].median - r.final_table[b].median;
      d.early_mean_delta = r.early_table[a].mean - r.early_table[b].mean;
      d.final_mean_delta = r.final_table[a].mean - r.final_table[b].mean;
      r.deltas.push_back(d);
    }
  }
  r.bounds = {static_cast<double>(steps.front()), static_cast<double>(steps.back()), y_min, y_max};
  return r;
}

std::string render_svg(const Report& report) {
  constexpr double kWidth = 800, kHeight = 500, kLeft = 70, kRight = 160, kTop = 30, kBottom = 50;
  static const char* kColors[] = {"#1f77b4", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#17becf"};
  const PlotBounds& b = report.bounds;
  const double x_span = b.x_max > b.x_min ? b.x_max - b.x_min : 1.0;
  const double y_pad = b.y_max > b.y_min ? 0.05 * (b.y_max - b.y_min) : 1.0;
  const double y_lo = b.y_min - y_pad, y_hi = b.y_max + y_pad;
  auto px = [&](double x) { return kLeft + (x - b.x_min) / x_span * (kWidth - kLeft - kRight); };
  auto py = [&](double y) { return kTop + (y_hi - y) / (y_hi - y_lo) * (kHeight - kTop - kBottom); };

  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << kWidth - kRight << "\" y2=\""
     << kHeight - kBottom << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kHeight - kBottom
     << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double yv = y_lo + (y_hi - y_lo) * i / 4.0;
    const double xv = b.x_min + x_span * i / 4.0;
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << std::llround(yv)
       << "</text>\n";
    os << "<text x=\"" << px(xv) << "\" y=\"" << kHeight - kBottom + 18 << "\" text-anchor=\"middle\">"
       << std::llround(xv) << "</text>\n";
  }
  os << "<text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\"" << kHeight - 10
     << "\" text-anchor=\"middle\">environment steps</text>\n";
  os << "<text x=\"16\" y=\"" << (kTop + kHeight - kBottom) / 2 << "\" transform=\"rotate(-90 16 "
     << (kTop + kHeight - kBottom) / 2 << ")\" text-anchor=\"middle\">evaluation return</text>\n";

  int index = 0;
  for (const auto& [label, curve] : report.curves) {
    const char* color = kColors[index % 6];
    os << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (const auto& p : curve) os << px(static_cast<double>(p.step)) << "," << py(p.ci_hi) << " ";
    for (auto it = curve.rbegin(); it != curve.rend(); ++it)
      os << px(static_cast<double>(it->step)) << "," << py(it->ci_lo) << " ";
    os << "\"/>\n";
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : curve) os << px(static_cast<double>(p.step)) << "," << py(p.median) << " ";
    os << "\"/>\n";
    const double ly = kTop + 20.0 * index;
    os << "<line x1=\"" << kWidth - kRight + 10 << "\" y1=\"" << ly << "\" x2=\"" << kWidth - kRight + 30
       << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << kWidth - kRight + 35 << "\" y=\"" << ly + 4 << "\">" << label << "</text>\n";
    ++index;
  }
  os << "<line x1=\"" << kLeft << "\" y1=\"" << py(report.expert_return) << "\" x2=\"" << kWidth - kRight
     << "\" y2=\"" << py(report.expert_return) << "\" stroke=\"orange\" stroke-width=\"2\" stroke-dasharray=\"6 4\"/>\n";
  const double ly = kTop + 20.0 * index;
  os << "<line x1=\"" << kWidth - kRight + 10 << "\" y1=\"" << ly << "\" x2=\"" << kWidth - kRight + 30
     << "\" y2=\"" << ly << "\" stroke=\"orange\" stroke-width=\"2\" stroke-dasharray=\"6 4\"/>\n";
  os << "<text x=\"" << kWidth - kRight + 35 << "\" y=\"" << ly + 4 << "\">expert</text>\n";
  os << "</svg>\n";
  return os.str();
}

void write_report(const Report& report, const std::string& out_dir) {
  fs::create_directories(out_dir);
  auto write = [&](const std::string& name, const std::string& text) {
    const std::string path = (fs::path(out_dir) / name).string();
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << text;
  };
  std::string curves = "arm,step,median,ci_lo,ci_hi,seeds\n";
  for (const auto& [label, curve] : report.curves)
    for (const auto& p : curve)
      curves += label + "," + std::to_string(p.step) + "," + format_double(p.median) + "," +
                format_double(p.ci_lo) + "," + format_double(p.ci_hi) + "," + std::to_string(p.seeds) + "\n";
  write("learning_curves.csv", curves);

  auto table = [](const std::vector<TableRow>& rows) {
    std::string t = "arm,step,mean,std,median,seeds\n";
    for (const auto& r : rows)
      t += r.arm + "," + std::to_string(r.step) + "," + format_double(r.mean) + "," + format_double(r.std) + "," +
           format_double(r.median) + "," + std::to_string(r.seeds) + "\n";
    return t;
  };
  write("early_table.csv", table(report.early_table));
  write("final_table.csv", table(report.final_table));

  std::string deltas = "arm_a,arm_b,early_median_delta,final_median_delta,early_mean_delta,final_mean_delta\n";
  for (const auto& d : report.deltas)
    deltas += d.arm_a + "," + d.arm_b + "," + format_double(d.early_median_delta) + "," +
              format_double(d.final_median_delta) + "," + format_double(d.early_mean_delta) + "," +
              format_double(d.final_mean_delta) + "\n";
  write("deltas.csv", deltas);
  write("learning_curves.svg", render_svg(report));
}

}  // namespace dai
