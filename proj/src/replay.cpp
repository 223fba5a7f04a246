#include "dai/replay.hpp"

#include <algorithm>
#include <string>

#include "dai/error.hpp"

namespace dai {

namespace {
bool bitwise_equal(const Vector& a, const Vector& b) {
  return a.size() == b.size() && std::equal(a.data(), a.data() + a.size(), b.data());
}
}  // namespace

bool Transition::operator==(const Transition& other) const {
  return bitwise_equal(observation, other.observation) && bitwise_equal(action, other.action) &&
         reward == other.reward && bitwise_equal(next_observation, other.next_observation) &&
         done == other.done && done_reason == other.done_reason;
}

Batch Batch::from_transitions(const std::vector<Transition>& transitions) {
  require(!transitions.empty(), "batch must be nonempty");
  const auto n = static_cast<Eigen::Index>(transitions.size());
  const auto obs_dim = transitions.front().observation.size();
  const auto act_dim = transitions.front().action.size();
  Batch b;
  b.observations.resize(obs_dim, n);
  b.actions.resize(act_dim, n);
  b.rewards.resize(n);
  b.next_observations.resize(obs_dim, n);
  b.bootstrap_masks.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Transition& t = transitions[j];
    require(t.observation.size() == obs_dim && t.next_observation.size() == obs_dim &&
                t.action.size() == act_dim,
            "batch transitions have inconsistent dimensions");
    b.observations.col(j) = t.observation;
    b.actions.col(j) = t.action;
    b.rewards(j) = t.reward;
    b.next_observations.col(j) = t.next_observation;
    b.bootstrap_masks(j) = t.bootstrap_mask();
  }
  return b;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, int obs_dim, int action_dim)
    : capacity_(capacity), obs_dim_(obs_dim), action_dim_(action_dim) {
  require(capacity > 0, "replay capacity must be positive");
  require(obs_dim > 0 && action_dim > 0, "replay dimensions must be positive");
  const auto cap = static_cast<Eigen::Index>(capacity);
  obs_.setZero(obs_dim, cap);
  actions_.setZero(action_dim, cap);
  rewards_.setZero(cap);
  next_obs_.setZero(obs_dim, cap);
  done_.assign(capacity, 0);
  time_limit_.assign(capacity, 0);
}

void ReplayBuffer::push(const Transition& t) {
  require(t.observation.size() == obs_dim_ && t.next_observation.size() == obs_dim_,
          "replay push: observation dimension mismatch (expected " + std::to_string(obs_dim_) + ")");
  require(t.action.size() == action_dim_,
          "replay push: action dimension mismatch (expected " + std::to_string(action_dim_) + ")");
  const auto s = static_cast<Eigen::Index>(insert_count_ % capacity_);
  obs_.col(s) = t.observation;
  actions_.col(s) = t.action;
  rewards_(s) = t.reward;
  next_obs_.col(s) = t.next_observation;
  done_[s] = t.done ? 1 : 0;
  time_limit_[s] = t.done_reason == DoneReason::time_limit ? 1 : 0;
  ++insert_count_;
}

Transition ReplayBuffer::slot(std::size_t s) const {
  const auto i = static_cast<Eigen::Index>(s);
  Transition t;
  t.observation = obs_.col(i);
  t.action = actions_.col(i);
  t.reward = rewards_(i);
  t.next_observation = next_obs_.col(i);
  t.done = done_[s] != 0;
  t.done_reason = time_limit_[s] ? DoneReason::time_limit : DoneReason::none;
  return t;
}

Transition ReplayBuffer::at(std::size_t i) const {
  require(i < size(), "replay index out of range");
  const std::size_t oldest = insert_count_ > capacity_ ? insert_count_ % capacity_ : 0;
  return slot((oldest + i) % capacity_);
}

std::vector<std::size_t> ReplayBuffer::draw_slots(std::size_t batch_size, Rng& rng) const {
  require(batch_size > 0, "batch size must be positive");
  // Draws are with replacement, so any non-empty buffer can fill a batch; the
  // trainer gates learning on size() >= batch_size itself.
  if (size() == 0)
    throw InsufficientSamples("insufficient samples: buffer is empty, batch needs " + std::to_string(batch_size));
  // Occupied slots are exactly [0, size()) whether or not the ring has wrapped.
  std::vector<std::size_t> slots(batch_size);
  for (auto& s : slots) s = static_cast<std::size_t>(rng.below(size()));
  return slots;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
  std::vector<Transition> out;
  out.reserve(batch_size);
  for (std::size_t s : draw_slots(batch_size, rng)) out.push_back(slot(s));
  return out;
}

Batch ReplayBuffer::sample_batch(std::size_t batch_size, Rng& rng) const {
  const auto slots = draw_slots(batch_size, rng);
  const auto n = static_cast<Eigen::Index>(batch_size);
  Batch b;
  b.observations.resize(obs_dim_, n);
  b.actions.resize(action_dim_, n);
  b.rewards.resize(n);
  b.next_observations.resize(obs_dim_, n);
  b.bootstrap_masks.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto s = static_cast<Eigen::Index>(slots[j]);
    b.observations.col(j) = obs_.col(s);
    b.actions.col(j) = actions_.col(s);
    b.rewards(j) = rewards_(s);
    b.next_observations.col(j) = next_obs_.col(s);
    b.bootstrap_masks(j) = (done_[s] && !time_limit_[s]) ? 0.0 : 1.0;
  }
  return b;
}

std::vector<double> ReplayBuffer::storage_flat() const {
  std::vector<double> flat;
  flat.reserve(size() * row_width());
  for (std::size_t s = 0; s < size(); ++s) {
    const auto i = static_cast<Eigen::Index>(s);
    for (int k = 0; k < obs_dim_; ++k) flat.push_back(obs_(k, i));
    for (int k = 0; k < action_dim_; ++k) flat.push_back(actions_(k, i));
    flat.push_back(rewards_(i));
    for (int k = 0; k < obs_dim_; ++k) flat.push_back(next_obs_(k, i));
    flat.push_back(done_[s]);
    flat.push_back(time_limit_[s]);
  }
  return flat;
}

void ReplayBuffer::restore(std::uint64_t insert_count, const std::vector<double>& flat) {
  const std::size_t rows = static_cast<std::size_t>(std::min<std::uint64_t>(insert_count, capacity_));
  if (flat.size() != rows * row_width())
    throw FormatError("replay storage has " + std::to_string(flat.size()) + " values, expected " +
                      std::to_string(rows * row_width()));
  insert_count_ = insert_count;
  std::size_t at = 0;
  for (std::size_t s = 0; s < rows; ++s) {
    const auto i = static_cast<Eigen::Index>(s);
    for (int k = 0; k < obs_dim_; ++k) obs_(k, i) = flat[at++];
    for (int k = 0; k < action_dim_; ++k) actions_(k, i) = flat[at++];
    rewards_(i) = flat[at++];
    for (int k = 0; k < obs_dim_; ++k) next_obs_(k, i) = flat[at++];
    done_[s] = flat[at++] != 0.0;
    time_limit_[s] = flat[at++] != 0.0;
  }
}

bool ReplayBuffer::operator==(const ReplayBuffer& other) const {
  if (capacity_ != other.capacity_ || insert_count_ != other.insert_count_ ||
      obs_dim_ != other.obs_dim_ || action_dim_ != other.action_dim_)
    return false;
  const auto a = storage_flat();
  const auto b = other.storage_flat();
  return std::equal(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace dai
