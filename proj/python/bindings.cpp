#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cli.hpp"
#include "dai/config.hpp"
#include "dai/dai.hpp"
#include "dai/diagnostics.hpp"
#include "dai/error.hpp"
#include "dai/harness.hpp"

namespace py = pybind11;
using namespace dai;

namespace {

// One live episode; the Python side only sees observations and rewards.
class Env {
 public:
  Env(const std::string& env, std::uint64_t seed) : spec_(EnvSpec::make(env_id_from_string(env))) {
    std::tie(state_, obs_) = env_reset(spec_, seed);
  }
  static Env at_state(const std::string& env, std::vector<double> physics) {
    Env e(env, 0);
    if (e.spec_.env_id == EnvId::pendulum_swingup) {
      require(physics.size() == 2, "pendulum state is (theta, theta_dot)");
      e.state_ = pendulum_state(physics[0], physics[1]);
    } else {
      require(physics.size() == 4, "point-mass state is (x, y, vx, vy)");
      e.state_ = point_mass_state(physics[0], physics[1], physics[2], physics[3]);
    }
    e.obs_ = observe(e.spec_, e.state_);
    return e;
  }
  py::tuple step(const Vector& action) {
    const StepResult r = env_step(spec_, state_, action);
    obs_ = r.observation;
    return py::make_tuple(r.observation, r.reward, r.done);
  }
  const Vector& observation() const { return obs_; }
  Vector expert_action() const { return scripted_expert_action(spec_, obs_); }
  std::array<double, 2> projection() const { return state_projection(state_); }
  int steps() const { return state_.step_count; }
  const EnvSpec& spec() const { return spec_; }

 private:
  EnvSpec spec_;
  EnvState state_;
  Vector obs_;
};

py::dict stats_dict(const ReturnStats& s) {
  py::dict d;
  d["returns"] = s.returns;
  d["mean"] = s.mean;
  d["median"] = s.median;
  d["std"] = s.std;
  d["min"] = s.min;
  d["max"] = s.max;
  d["ci_lo"] = s.ci_lo;
  d["ci_hi"] = s.ci_hi;
  return d;
}

RunConfig config_from_dict(const std::map<std::string, std::string>& settings) {
  KeyValues kv(settings.begin(), settings.end());
  return run_config_from(kv);
}

VisitationHistogram histogram_from(const std::string& env, const std::vector<std::vector<std::array<double, 2>>>& paths,
                                   double gamma, int bins) {
  const EnvId id = env_id_from_string(env);
  std::vector<Trajectory> trajs;
  for (const auto& path : paths) {
    Trajectory t;
    t.env_id = id;
    t.projections = path;
    t.rewards.assign(path.size(), 0.0);
    t.done.assign(path.size(), false);
    if (!t.done.empty()) t.done.back() = true;
    trajs.push_back(std::move(t));
  }
  return estimate_visitation(trajs, gamma, Binning::for_env(id, bins));
}

VisitationHistogram wrap_grid(const std::string& env, const Matrix& grid) {
  VisitationHistogram h;
  h.binning = Binning::for_env(env_id_from_string(env), static_cast<int>(grid.rows()));
  require(grid.rows() == grid.cols(), "visitation grids are square");
  h.grid = grid;
  return h;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Dynamic action interpolation: environments, schedules, training and diagnostics";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ContractViolation& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const ConfigError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const IoError& e) {
      PyErr_SetString(PyExc_OSError, e.what());
    } catch (const FormatError& e) {
      PyErr_SetString(PyExc_OSError, e.what());
    }
  });

  m.def(
      "alpha",
      [](std::int64_t t, std::int64_t t_change, const std::string& shape, double constant_value) {
        ScheduleSpec s{schedule_shape_from_string(shape), t_change, constant_value};
        s.validate();
        return alpha_of(s, t);
      },
      py::arg("t"), py::arg("t_change"), py::arg("shape") = "linear", py::arg("constant_value") = 1.0);
  m.def("interpolate", &interpolate, py::arg("expert"), py::arg("learner"), py::arg("alpha"));

  py::class_<Env>(m, "Env")
      .def(py::init<const std::string&, std::uint64_t>(), py::arg("env") = "pendulum_swingup", py::arg("seed") = 0)
      .def_static("at_state", &Env::at_state, py::arg("env"), py::arg("physics"))
      .def("step", &Env::step, py::arg("action"), "Returns (observation, reward, done).")
      .def_property_readonly("observation", &Env::observation)
      .def_property_readonly("projection", &Env::projection)
      .def_property_readonly("steps", &Env::steps)
      .def_property_readonly("obs_dim", [](const Env& e) { return e.spec().obs_dim; })
      .def_property_readonly("action_dim", [](const Env& e) { return e.spec().action_dim; })
      .def_property_readonly("action_low", [](const Env& e) { return e.spec().action_low; })
      .def_property_readonly("action_high", [](const Env& e) { return e.spec().action_high; })
      .def_property_readonly("max_episode_steps", [](const Env& e) { return e.spec().max_episode_steps; })
      .def("expert_action", &Env::expert_action);

  m.def(
      "scripted_expert_action",
      [](const std::string& env, const Vector& obs) {
        return scripted_expert_action(EnvSpec::make(env_id_from_string(env)), obs);
      },
      py::arg("env"), py::arg("observation"));

  m.def(
      "evaluate_expert",
      [](const std::string& env, const std::string& expert, int episodes, std::uint64_t seed) {
        const EnvSpec spec = EnvSpec::make(env_id_from_string(env));
        const ExpertPolicy e = resolve_expert(ExpertSource::parse(expert), spec);
        return stats_dict(evaluate(expert_policy(e, spec), spec.env_id, episodes, seed));
      },
      py::arg("env") = "pendulum_swingup", py::arg("expert") = "scripted", py::arg("episodes") = 10,
      py::arg("seed") = 0);

  m.def(
      "evaluate_policy",
      [](const std::string& env, const std::function<Vector(const Vector&)>& policy, int episodes,
         std::uint64_t seed) {
        return stats_dict(evaluate(Policy(policy), env_id_from_string(env), episodes, seed));
      },
      py::arg("env"), py::arg("policy"), py::arg("episodes") = 10, py::arg("seed") = 0,
      "Noiseless rollouts of a Python callable observation -> action.");

  m.def(
      "collect_demonstrations",
      [](const std::string& env, int episodes, std::uint64_t seed, const std::string& out) {
        const CollectSummary s =
            collect_demonstrations(ExpertPolicy::scripted(), env_id_from_string(env), episodes, seed, out);
        return py::make_tuple(s.pairs, s.mean_return);
      },
      py::arg("env"), py::arg("episodes"), py::arg("seed"), py::arg("out"));

  m.def("run_config_keys", &run_config_keys);
  m.def(
      "resolve_config",
      [](const std::map<std::string, std::string>& settings) {
        const KeyValues kv = to_key_values(config_from_dict(settings));
        return std::map<std::string, std::string>(kv.begin(), kv.end());
      },
      py::arg("settings"), "Fills in defaults; raises ValueError listing every bad key.");

  m.def(
      "train",
      [](const std::map<std::string, std::string>& settings, const std::string& output_dir) {
        const RunConfig config = config_from_dict(settings);
        RunMetrics metrics;
        {
          py::gil_scoped_release release;
          Trainer trainer(config);
          trainer.run();
          if (!output_dir.empty()) write_run_outputs(output_dir, trainer);
          metrics = trainer.metrics();
        }
        py::dict out;
        std::vector<double> alpha;
        std::vector<std::pair<std::int64_t, double>> episodes;
        for (const auto& s : metrics.steps) {
          alpha.push_back(s.alpha);
          if (s.episode_return) episodes.emplace_back(s.step, *s.episode_return);
        }
        py::list evals;
        for (const auto& e : metrics.evals) {
          py::dict d;
          d["step"] = e.step;
          d["mean"] = e.mean;
          d["median"] = e.median;
          d["ci_lo"] = e.ci_lo;
          d["ci_hi"] = e.ci_hi;
          evals.append(d);
        }
        out["alpha"] = alpha;
        out["episode_returns"] = episodes;
        out["evals"] = evals;
        out["metrics_csv"] = metrics_csv_header() + metrics_csv_rows(metrics);
        return out;
      },
      py::arg("settings"), py::arg("output_dir") = "");

  m.def(
      "visitation_grid",
      [](const std::string& env, const std::vector<std::vector<std::array<double, 2>>>& paths, double gamma,
         int bins) { return histogram_from(env, paths, gamma, bins).grid; },
      py::arg("env"), py::arg("paths"), py::arg("gamma") = 0.99, py::arg("bins") = 32,
      "Discounted visitation grid from projected state paths.");
  m.def(
      "total_variation",
      [](const std::string& env, const Matrix& a, const Matrix& b) {
        return total_variation(wrap_grid(env, a), wrap_grid(env, b));
      },
      py::arg("env"), py::arg("a"), py::arg("b"));
  m.def(
      "mixture_gap",
      [](const std::string& env, const Matrix& mix, const Matrix& expert, const Matrix& rl, double alpha) {
        return mixture_gap(wrap_grid(env, mix), wrap_grid(env, expert), wrap_grid(env, rl), alpha);
      },
      py::arg("env"), py::arg("mix"), py::arg("expert"), py::arg("rl"), py::arg("alpha"));

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        py::gil_scoped_release release;
        return cli::parse_and_dispatch(args);
      },
      py::arg("args"), "Runs the command-line tool in-process; returns its exit code.");
}
