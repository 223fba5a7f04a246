#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace dai {

/// xoshiro256** generator seeded through splitmix64.
///
/// Streams are derived from (seed, label) so that training, evaluation and
/// environment randomness never share state. All floating-point draws are
/// built from raw 64-bit outputs, so sequences are identical on every
/// platform with IEEE-754 doubles.
class Rng {
 public:
  using State = std::array<std::uint64_t, 4>;

  Rng() : Rng(0) {}
  explicit Rng(std::uint64_t seed);

  /// Independent stream for `label` under `seed`.
  static Rng stream(std::uint64_t seed, std::string_view label);

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double low, double high);
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);
  /// Standard normal via Box-Muller; caches the second variate.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  struct Snapshot {
    State state{};
    bool has_spare = false;
    double spare = 0.0;
    bool operator==(const Snapshot&) const = default;
  };
  Snapshot snapshot() const { return {s_, has_spare_, spare_}; }
  void restore(const Snapshot& snap);

  bool operator==(const Rng& other) const { return snapshot() == other.snapshot(); }

 private:
  State s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t& x);

/// FNV-1a hash of a label; used only for stream derivation.
std::uint64_t hash_label(std::string_view label);

}  // namespace dai
