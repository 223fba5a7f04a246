#include "dai/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dai/config.hpp"
#include "dai/error.hpp"

namespace dai {

Binning Binning::for_env(EnvId env, int bins) {
  require(bins >= 1, "binning needs at least one bin");
  Binning b;
  b.env_id = env;
  b.bins = bins;
  if (env == EnvId::pendulum_swingup) {
    b.low = {-std::numbers::pi, -8.0};
    b.high = {std::numbers::pi, 8.0};
  } else {
    b.low = {-5.0, -5.0};
    b.high = {5.0, 5.0};
  }
  return b;
}

std::pair<int, int> Binning::locate(const std::array<double, 2>& p, bool& clamped) const {
  int idx[2];
  for (int d = 0; d < 2; ++d) {
    const double x = (p[d] - low[d]) / (high[d] - low[d]) * bins;
    if (p[d] < low[d] || p[d] > high[d]) clamped = true;
    int i = static_cast<int>(std::floor(x));
    idx[d] = std::clamp(i, 0, bins - 1);
  }
  return {idx[0], idx[1]};
}

VisitationHistogram estimate_visitation(const std::vector<Trajectory>& trajectories, double gamma,
                                        const Binning& binning) {
  require(!trajectories.empty(), "estimate_visitation: no trajectories");
  require(gamma >= 0.0 && gamma < 1.0, "estimate_visitation: gamma must lie in [0, 1)");
  VisitationHistogram h;
  h.binning = binning;
  h.gamma = gamma;
  h.grid = Matrix::Zero(binning.bins, binning.bins);
  h.trajectory_count = trajectories.size();
  const double n = static_cast<double>(trajectories.size());
  double deposited = 0.0;
  for (const Trajectory& traj : trajectories) {
    require(traj.env_id == binning.env_id, "estimate_visitation: trajectory from another environment");
    double weight = 1.0 - gamma;
    double kept = 0.0;
    for (const auto& p : traj.projections) {
      bool clamped = false;
      const auto [i, j] = binning.locate(p, clamped);
      if (clamped) ++h.clamped_states;
      h.grid(i, j) += weight / n;
      kept += weight;
      weight *= gamma;
    }
    deposited += kept / n;
    h.dropped_mass += (1.0 - kept) / n;
  }
  require(deposited > 0.0, "estimate_visitation: trajectories deposited no weight");
  h.grid /= deposited;
  return h;
}

double total_variation(const VisitationHistogram& a, const VisitationHistogram& b) {
  require(a.binning == b.binning, "total_variation: binnings differ");
  return 0.5 * (a.grid - b.grid).cwiseAbs().sum();
}

double mixture_gap(const VisitationHistogram& d_mix, const VisitationHistogram& d_expert,
                   const VisitationHistogram& d_rl, double alpha) {
  require(d_mix.binning == d_expert.binning && d_mix.binning == d_rl.binning,
          "mixture_gap: histograms use different binnings");
  require(d_mix.gamma == d_expert.gamma && d_mix.gamma == d_rl.gamma,
          "mixture_gap: histograms use different discounts");
  require(alpha >= 0.0 && alpha <= 1.0, "mixture_gap: alpha must lie in [0, 1]");
  Matrix mixture;
  if (alpha == 0.0)
    mixture = d_expert.grid;
  else if (alpha == 1.0)
    mixture = d_rl.grid;
  else
    mixture = (1.0 - alpha) * d_expert.grid + alpha * d_rl.grid;
  return 0.5 * (d_mix.grid - mixture).cwiseAbs().sum();
}

bool HighValueSet::contains(const std::array<double, 2>& p) const {
  if (env_id == EnvId::pendulum_swingup) return std::abs(p[0]) < 0.5 && std::abs(p[1]) < 2.0;
  return std::hypot(p[0], p[1]) < 0.5;
}

double high_value_fraction(const std::vector<Trajectory>& trajectories, const HighValueSet& set,
                           double gamma) {
  require(!trajectories.empty(), "high_value_fraction: no trajectories");
  require(gamma >= 0.0 && gamma < 1.0, "high_value_fraction: gamma must lie in [0, 1)");
  double inside = 0.0;
  double total = 0.0;
  for (const Trajectory& traj : trajectories) {
    double weight = 1.0 - gamma;
    for (const auto& p : traj.projections) {
      if (set.contains(p)) inside += weight;
      total += weight;
      weight *= gamma;
    }
  }
  require(total > 0.0, "high_value_fraction: trajectories are empty");
  return inside / total;
}

std::vector<double> returns_to_go(const std::vector<double>& rewards, double gamma) {
  std::vector<double> g(rewards.size());
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    g[i] = acc;
  }
  return g;
}

ValueErrorReport critic_value_error(const TD3Agent& agent, const std::vector<Trajectory>& trajectories,
                                    double gamma, const std::string& label) {
  ValueErrorReport r;
  r.label = label;
  r.gamma = gamma;
  std::size_t n = 0;
  for (const auto& t : trajectories) n += t.size();
  if (n == 0) throw ContractViolation("critic_value_error: no recorded states");

  Matrix obs(agent.env.obs_dim, static_cast<Eigen::Index>(n));
  Vector truth(static_cast<Eigen::Index>(n));
  Eigen::Index col = 0;
  for (const auto& t : trajectories) {
    require(t.observations.size() == t.size(), "critic_value_error: trajectory lacks observations");
    const auto g = returns_to_go(t.rewards, gamma);
    for (std::size_t i = 0; i < t.size(); ++i, ++col) {
      obs.col(col) = t.observations[i];
      truth(col) = g[i];
    }
  }
  const Matrix actions = scale_actions(agent.env, forward_batch(agent.actor, obs));
  const Vector estimate = twin_min_q(agent.critic1, agent.critic2, obs, actions);
  r.mse = (estimate - truth).squaredNorm() / static_cast<double>(n);
  r.samples = n;
  return r;
}

std::string histogram_csv(const VisitationHistogram& h) {
  std::string out = "row,col,first_center,second_center,mass\n";
  const auto& b = h.binning;
  for (int i = 0; i < b.bins; ++i) {
    for (int j = 0; j < b.bins; ++j) {
      const double c0 = b.low[0] + (i + 0.5) * (b.high[0] - b.low[0]) / b.bins;
      const double c1 = b.low[1] + (j + 0.5) * (b.high[1] - b.low[1]) / b.bins;
      out += std::to_string(i) + "," + std::to_string(j) + "," + format_double(c0) + "," +
             format_double(c1) + "," + format_double(h.grid(i, j)) + "\n";
    }
  }
  return out;
}

}  // namespace dai
