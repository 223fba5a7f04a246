#include "dai/trajectory.hpp"

#include "dai/binary_io.hpp"
#include "dai/error.hpp"

namespace dai {

namespace {
constexpr std::string_view kTrajectoryMagic = "DAITRAJ1";
constexpr std::size_t kRowWidth = 4;
}  // namespace

void Trajectory::append(const EnvState& state, const Observation& observation, double reward,
                        bool is_done) {
  projections.push_back(state_projection(state));
  observations.push_back(observation);
  rewards.push_back(reward);
  done.push_back(is_done);
}

double Trajectory::undiscounted_return() const {
  double total = 0.0;
  for (double r : rewards) total += r;
  return total;
}

void write_trajectory_file(const std::string& path, const TrajectoryFileHeader& header,
                           const std::vector<Trajectory>& trajectories) {
  std::vector<double> rows;
  std::size_t count = 0;
  for (const auto& t : trajectories) {
    require(to_string(t.env_id) == header.env_id, "trajectory env does not match file header");
    for (std::size_t i = 0; i < t.size(); ++i) {
      // The final row of every episode is flagged so episodes can be split on read.
      const bool last = i + 1 == t.size();
      rows.insert(rows.end(), {t.projections[i][0], t.projections[i][1], t.rewards[i],
                               (t.done[i] || last) ? 1.0 : 0.0});
      ++count;
    }
  }
  const nlohmann::json h{{"env_id", header.env_id},
                         {"policy_label", header.policy_label},
                         {"schedule", header.schedule},
                         {"seed", header.seed},
                         {"gamma", header.gamma},
                         {"episodes", trajectories.size()},
                         {"rows", count}};
  write_container(path, kTrajectoryMagic, h, rows);
}

std::pair<TrajectoryFileHeader, std::vector<Trajectory>> read_trajectory_file(const std::string& path) {
  const BinaryContainer c = read_container(path, kTrajectoryMagic);
  TrajectoryFileHeader h;
  try {
    h.env_id = c.header.at("env_id").get<std::string>();
    h.policy_label = c.header.at("policy_label").get<std::string>();
    h.schedule = c.header.at("schedule").get<std::string>();
    h.seed = c.header.at("seed").get<std::uint64_t>();
    h.gamma = c.header.at("gamma").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + path + "': malformed trajectory header: " + e.what());
  }
  if (c.payload.size() % kRowWidth != 0)
    throw FormatError("'" + path + "': corrupt file, payload is not whole rows");
  const EnvId env = env_id_from_string(h.env_id);
  std::vector<Trajectory> out;
  Trajectory current;
  current.env_id = env;
  for (std::size_t i = 0; i < c.payload.size(); i += kRowWidth) {
    current.projections.push_back({c.payload[i], c.payload[i + 1]});
    current.rewards.push_back(c.payload[i + 2]);
    const bool done = c.payload[i + 3] != 0.0;
    current.done.push_back(done);
    if (done) {
      out.push_back(std::move(current));
      current = Trajectory{};
      current.env_id = env;
    }
  }
  if (current.size() > 0) out.push_back(std::move(current));
  return {h, out};
}

}  // namespace dai
