#pragma once

#include <array>
#include <string>
#include <vector>

#include "dai/envs.hpp"

namespace dai {

/// One recorded episode. `projections[t]` and `observations[t]` describe the
/// state the agent acted in at step t; `rewards[t]` is the reward that step
/// earned.
struct Trajectory {
  EnvId env_id = EnvId::pendulum_swingup;
  std::vector<std::array<double, 2>> projections;
  std::vector<Observation> observations;
  std::vector<double> rewards;
  std::vector<bool> done;

  std::size_t size() const { return projections.size(); }
  void append(const EnvState& state, const Observation& observation, double reward, bool is_done);
  double undiscounted_return() const;
};

struct TrajectoryFileHeader {
  std::string env_id;
  std::string policy_label;
  std::string schedule;  // e.g. "constant:0.5" or "linear:20000"
  std::uint64_t seed = 0;
  double gamma = 0.99;
};

/// "DAITRAJ1" file: JSON header, then one row per step
/// (proj0, proj1, reward, done) as little-endian doubles. Episodes are
/// delimited by done = 1 rows.
void write_trajectory_file(const std::string& path, const TrajectoryFileHeader& header,
                           const std::vector<Trajectory>& trajectories);
std::pair<TrajectoryFileHeader, std::vector<Trajectory>> read_trajectory_file(const std::string& path);

}  // namespace dai
