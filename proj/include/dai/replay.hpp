#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dai/envs.hpp"
#include "dai/numerics.hpp"
#include "dai/rng.hpp"

namespace dai {

struct Transition {
  Observation observation;
  Action action;  // the executed action, after interpolation, noise and clipping
  double reward = 0.0;
  Observation next_observation;
  bool done = false;
  DoneReason done_reason = DoneReason::none;

  /// 0 only for genuinely absorbing terminations; time limits still bootstrap.
  double bootstrap_mask() const { return done && done_reason != DoneReason::time_limit ? 0.0 : 1.0; }
  bool operator==(const Transition& other) const;
};

/// Column-major batch: column j holds transition j.
struct Batch {
  Matrix observations;
  Matrix actions;
  Vector rewards;
  Matrix next_observations;
  Vector bootstrap_masks;

  Eigen::Index size() const { return rewards.size(); }
  static Batch from_transitions(const std::vector<Transition>& transitions);
};

/// Fixed-capacity ring of transitions, sampled uniformly with replacement.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int obs_dim, int action_dim);

  void push(const Transition& t);

  std::size_t size() const { return static_cast<std::size_t>(std::min<std::uint64_t>(insert_count_, capacity_)); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t insert_count() const { return insert_count_; }
  int obs_dim() const { return obs_dim_; }
  int action_dim() const { return action_dim_; }

  /// i = 0 is the oldest stored transition.
  Transition at(std::size_t i) const;

  std::vector<Transition> sample(std::size_t batch_size, Rng& rng) const;
  Batch sample_batch(std::size_t batch_size, Rng& rng) const;

  /// Raw storage for checkpointing: one row per slot in slot order, columns
  /// obs, action, reward, next_obs, done, done_reason.
  std::vector<double> storage_flat() const;
  void restore(std::uint64_t insert_count, const std::vector<double>& flat);
  std::size_t row_width() const { return 2 * obs_dim_ + action_dim_ + 3; }

  bool operator==(const ReplayBuffer& other) const;

 private:
  std::vector<std::size_t> draw_slots(std::size_t batch_size, Rng& rng) const;
  Transition slot(std::size_t s) const;

  std::size_t capacity_;
  int obs_dim_;
  int action_dim_;
  std::uint64_t insert_count_ = 0;
  Matrix obs_;
  Matrix actions_;
  Vector rewards_;
  Matrix next_obs_;
  std::vector<std::uint8_t> done_;
  std::vector<std::uint8_t> time_limit_;
};

}  // namespace dai
