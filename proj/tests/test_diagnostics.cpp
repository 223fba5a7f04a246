#include <gtest/gtest.h>

#include <algorithm>
#include <memory>

#include "dai/diagnostics.hpp"
#include "dai/error.hpp"
#include "dai/harness.hpp"

using namespace dai;

namespace {

const EnvSpec kPendulum = EnvSpec::make(EnvId::pendulum_swingup);

Trajectory pendulum_path(const std::vector<std::pair<double, double>>& states, double reward = -1.0) {
  Trajectory t;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const EnvState s = pendulum_state(states[i].first, states[i].second);
    t.append(s, observe(kPendulum, s), reward, i + 1 == states.size());
  }
  return t;
}

VisitationHistogram random_histogram(Rng& rng) {
  VisitationHistogram h;
  h.binning = Binning::for_env(EnvId::pendulum_swingup, 8);
  h.grid = Matrix(8, 8);
  for (auto& v : h.grid.reshaped()) v = rng.uniform() < 0.5 ? 0.0 : rng.uniform();
  h.grid /= h.grid.sum();
  return h;
}

Policy uniform_random_policy(std::uint64_t seed) {
  auto rng = std::make_shared<Rng>(seed);
  return [rng](const Observation&) { return Action(Action::Constant(1, rng->uniform(-2.0, 2.0))); };
}

}  // namespace

TEST(Visitation, SingleCellHoldsAllMass) {
  const Trajectory t = pendulum_path(std::vector<std::pair<double, double>>(200, {0.01, 0.01}));
  const auto h = estimate_visitation({t}, 0.9, Binning::for_env(EnvId::pendulum_swingup));
  EXPECT_NEAR(h.grid.maxCoeff(), 1.0, 1e-12);
  EXPECT_NEAR(h.total(), 1.0, 1e-9);
}

TEST(Visitation, TwoStateGeometricSplit) {
  std::vector<std::pair<double, double>> states(200, {2.0, -3.0});
  states[0] = {-2.0, 3.0};
  const auto binning = Binning::for_env(EnvId::pendulum_swingup);
  const auto h = estimate_visitation({pendulum_path(states)}, 0.5, binning);
  bool clamped = false;
  const auto [i0, j0] = binning.locate({-2.0, 3.0}, clamped);
  const auto [i1, j1] = binning.locate({2.0, -3.0}, clamped);
  EXPECT_NEAR(h.grid(i0, j0), 0.5, 1e-12);
  EXPECT_NEAR(h.grid(i1, j1), 0.5, 1e-12);
}

TEST(Visitation, NormalisedNonNegativeAndTailReported) {
  const auto trajs = record_episodes(uniform_random_policy(3), EnvId::pendulum_swingup, 7, 11);
  const auto h = estimate_visitation(trajs, 0.99, Binning::for_env(EnvId::pendulum_swingup));
  EXPECT_NEAR(h.total(), 1.0, 1e-9);
  EXPECT_GE(h.grid.minCoeff(), 0.0);
  EXPECT_NEAR(h.dropped_mass, std::pow(0.99, 200), 1e-12);
  EXPECT_EQ(h.trajectory_count, 7u);
}

TEST(Visitation, OutOfRangeStatesAreClampedAndCounted) {
  Trajectory t;
  EnvState s = point_mass_state(9.0, -9.0);
  t.append(s, observe(EnvSpec::make(EnvId::point_mass_2d), s), 0.0, true);
  t.env_id = EnvId::point_mass_2d;
  const auto h = estimate_visitation({t}, 0.9, Binning::for_env(EnvId::point_mass_2d));
  EXPECT_EQ(h.clamped_states, 1u);
  EXPECT_NEAR(h.grid(31, 0), 1.0, 1e-12);
}

TEST(Visitation, EmptyInputRejected) {
  EXPECT_ANY_THROW(estimate_visitation({}, 0.9, Binning::for_env(EnvId::pendulum_swingup)));
}

TEST(MixtureGap, IdenticalDistributionsHaveZeroGap) {
  Rng rng(1);
  const auto h = random_histogram(rng);
  for (double alpha : {0.0, 0.3, 0.5, 1.0}) EXPECT_NEAR(mixture_gap(h, h, h, alpha), 0.0, 1e-15);
}

TEST(MixtureGap, EndpointsExactWithMatchedSeeds) {
  TD3Config cfg;
  cfg.hidden = {16, 16};
  Rng init(2);
  const TD3Agent agent = TD3Agent::create(kPendulum, cfg, init);
  const auto expert = ExpertPolicy::scripted();
  const auto binning = Binning::for_env(EnvId::pendulum_swingup);
  auto hist = [&](const Policy& p) {
    return estimate_visitation(record_episodes(p, EnvId::pendulum_swingup, 10, 5), 0.99, binning);
  };
  const auto d_e = hist(expert_policy(expert, kPendulum));
  const auto d_rl = hist(actor_policy(agent));
  EXPECT_LT(mixture_gap(hist(mixed_policy(expert, agent, 0.0)), d_e, d_rl, 0.0), 1e-12);
  EXPECT_LT(mixture_gap(hist(mixed_policy(expert, agent, 1.0)), d_e, d_rl, 1.0), 1e-12);
}

TEST(MixtureGap, BinningMismatchRejected) {
  Rng rng(1);
  auto a = random_histogram(rng);
  auto b = random_histogram(rng);
  b.binning = Binning::for_env(EnvId::point_mass_2d, 8);
  EXPECT_THROW(mixture_gap(a, b, a, 0.5), ContractViolation);
}

TEST(TotalVariation, MetricAxioms) {
  Rng rng(42);
  for (int i = 0; i < 200; ++i) {
    const auto a = random_histogram(rng), b = random_histogram(rng), c = random_histogram(rng);
    EXPECT_EQ(total_variation(a, a), 0.0);
    EXPECT_EQ(total_variation(a, b), total_variation(b, a));
    EXPECT_LE(total_variation(a, c), total_variation(a, b) + total_variation(b, c) + 1e-15);
    EXPECT_GE(total_variation(a, b), 0.0);
    EXPECT_LE(total_variation(a, b), 1.0 + 1e-15);
  }
}

TEST(HighValue, InsideAndOutside) {
  const auto set = HighValueSet::for_env(EnvId::pendulum_swingup);
  const auto inside = pendulum_path(std::vector<std::pair<double, double>>(50, {0.1, 0.5}));
  const auto outside = pendulum_path(std::vector<std::pair<double, double>>(50, {3.0, 0.0}));
  EXPECT_DOUBLE_EQ(high_value_fraction({inside}, set, 0.99), 1.0);
  EXPECT_EQ(high_value_fraction({outside}, set, 0.99), 0.0);
}

TEST(HighValue, ExpertBeatsRandomPolicy) {
  const auto set = HighValueSet::for_env(EnvId::pendulum_swingup);
  const auto expert = record_episodes(expert_policy(ExpertPolicy::scripted(), kPendulum),
                                      EnvId::pendulum_swingup, 50, 100);
  const auto random = record_episodes(uniform_random_policy(9), EnvId::pendulum_swingup, 50, 100);
  EXPECT_GT(high_value_fraction(expert, set, 0.99), high_value_fraction(random, set, 0.99));
}

TEST(HighValue, InvariantUnderReordering) {
  const auto set = HighValueSet::for_env(EnvId::pendulum_swingup);
  auto trajs = record_episodes(expert_policy(ExpertPolicy::scripted(), kPendulum), EnvId::pendulum_swingup, 12, 0);
  const double before = high_value_fraction(trajs, set, 0.99);
  std::reverse(trajs.begin(), trajs.end());
  std::rotate(trajs.begin(), trajs.begin() + 5, trajs.end());
  EXPECT_NEAR(high_value_fraction(trajs, set, 0.99), before, 1e-15);
}

TEST(ValueError, ReturnsToGo) {
  const auto g = returns_to_go({1, 1, 1}, 0.5);
  EXPECT_EQ(g, (std::vector<double>{1.75, 1.5, 1.0}));
}

TEST(ValueError, ZeroRewardZeroCritic) {
  TD3Config cfg;
  cfg.hidden = {8};
  Rng init(0);
  TD3Agent agent = TD3Agent::create(kPendulum, cfg, init);
  agent.critic1 = NetworkParameters::zeros(agent.critic1.spec);
  agent.critic2 = NetworkParameters::zeros(agent.critic2.spec);
  const auto t = pendulum_path(std::vector<std::pair<double, double>>(50, {1.0, 0.0}), 0.0);
  const auto r = critic_value_error(agent, {t}, 0.99, "zero");
  EXPECT_EQ(r.mse, 0.0);
  EXPECT_EQ(r.samples, 50u);
  EXPECT_EQ(r.label, "zero");
}

TEST(ValueError, GeometricSeriesGroundTruth) {
  TD3Config cfg;
  cfg.hidden = {8};
  Rng init(0);
  TD3Agent agent = TD3Agent::create(kPendulum, cfg, init);
  agent.critic1 = NetworkParameters::zeros(agent.critic1.spec);
  agent.critic1.bias(agent.critic1.spec.layer_count() - 1)(0) = 2.0;
  agent.critic2 = agent.critic1;
  const auto t = pendulum_path(std::vector<std::pair<double, double>>(10000, {1.0, 0.0}), 1.0);
  EXPECT_NEAR(returns_to_go(t.rewards, 0.5)[5000], 2.0, 1e-12);
  EXPECT_LT(critic_value_error(agent, {t}, 0.5, "const").mse, 1e-3);
}

TEST(ValueError, EmptyTrajectoriesRejected) {
  TD3Config cfg;
  cfg.hidden = {8};
  Rng init(0);
  const TD3Agent agent = TD3Agent::create(kPendulum, cfg, init);
  EXPECT_ANY_THROW(critic_value_error(agent, {}, 0.99, "none"));
}
