#pragma once

#include <array>
#include <string>
#include <vector>

#include "dai/agents.hpp"
#include "dai/envs.hpp"
#include "dai/trajectory.hpp"

namespace dai {

/// Fixed grid over the 2-D state projection of an environment.
struct Binning {
  EnvId env_id = EnvId::pendulum_swingup;
  int bins = 32;
  std::array<double, 2> low{};
  std::array<double, 2> high{};

  /// pendulum: [-pi, pi] x [-8, 8]; point mass: [-5, 5]^2.
  static Binning for_env(EnvId env, int bins = 32);
  /// Bin of a projected state; out-of-range coordinates land in the edge bin
  /// and set `clamped`.
  std::pair<int, int> locate(const std::array<double, 2>& p, bool& clamped) const;
  bool operator==(const Binning&) const = default;
};

/// Discounted visitation estimate on a bins x bins grid; grid(i, j) is the
/// mass of cell (first coordinate bin i, second coordinate bin j).
struct VisitationHistogram {
  Binning binning;
  Matrix grid;
  double gamma = 0.99;
  std::size_t trajectory_count = 0;
  std::size_t clamped_states = 0;
  /// Mean share of the infinite-horizon weight lost to episode truncation.
  double dropped_mass = 0.0;

  double total() const { return grid.sum(); }
};

/// Each state at index t deposits (1 - gamma) * gamma^t into its cell; deposits
/// are averaged over trajectories and renormalised by the total deposited
/// weight, which removes the truncated geometric tail.
VisitationHistogram estimate_visitation(const std::vector<Trajectory>& trajectories, double gamma,
                                        const Binning& binning);

double total_variation(const VisitationHistogram& a, const VisitationHistogram& b);

/// TV(d_mix, (1 - alpha) d_expert + alpha d_rl).
double mixture_gap(const VisitationHistogram& d_mix, const VisitationHistogram& d_expert,
                   const VisitationHistogram& d_rl, double alpha);

/// Near-goal indicator standing in for the high-value set.
struct HighValueSet {
  EnvId env_id = EnvId::pendulum_swingup;

  static HighValueSet for_env(EnvId env) { return {env}; }
  /// pendulum: |wrap(theta)| < 0.5 and |theta_dot| < 2; point mass: |p| < 0.5.
  bool contains(const std::array<double, 2>& projection) const;
};

/// Discount-weighted share of visitation mass inside the set.
double high_value_fraction(const std::vector<Trajectory>& trajectories, const HighValueSet& set,
                           double gamma);

struct ValueErrorReport {
  std::string label;
  double mse = 0.0;
  std::size_t samples = 0;
  double gamma = 0.99;
};

/// Discounted return-to-go at every index, truncated at the end of the
/// recorded episode.
std::vector<double> returns_to_go(const std::vector<double>& rewards, double gamma);

/// Mean squared error between min(Q1, Q2)(s, actor(s)) and the Monte-Carlo
/// return-to-go over every recorded state.
ValueErrorReport critic_value_error(const TD3Agent& agent, const std::vector<Trajectory>& trajectories,
                                    double gamma, const std::string& label);

/// Long-form CSV: row,col,first_center,second_center,mass.
std::string histogram_csv(const VisitationHistogram& h);

}  // namespace dai
