#include <gtest/gtest.h>

#include <cmath>

#include "dai/agents.hpp"
#include "dai/error.hpp"

using namespace dai;

namespace {

const EnvSpec kPendulum = EnvSpec::make(EnvId::pendulum_swingup);

TD3Agent make_agent(std::uint64_t seed = 1, TD3Config cfg = {}) {
  cfg.hidden = {16, 16};
  Rng rng(seed);
  return TD3Agent::create(kPendulum, cfg, rng);
}

void make_constant(NetworkParameters& p, double value) {
  p = NetworkParameters::zeros(p.spec);
  p.bias(p.spec.layer_count() - 1)(0) = value;
}

Transition transition(Rng& rng) {
  Transition t;
  t.observation = Vector(3);
  t.next_observation = Vector(3);
  for (auto& v : t.observation) v = rng.uniform(-1, 1);
  for (auto& v : t.next_observation) v = rng.uniform(-1, 1);
  t.action = Vector::Constant(1, rng.uniform(-2, 2));
  t.reward = rng.uniform(-5, 0);
  return t;
}

std::vector<Transition> batch_of(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Transition> out;
  for (int i = 0; i < n; ++i) out.push_back(transition(rng));
  return out;
}

double mean_q1_of_actor(const TD3Agent& a, const Batch& b) {
  const Matrix actions = scale_actions(a.env, forward_batch(a.actor, b.observations));
  Matrix in(b.observations.rows() + actions.rows(), b.size());
  in << b.observations, actions;
  return forward_batch(a.critic1, in).mean();
}

}  // namespace

TEST(Actor, ZeroActorGivesMidpoint) {
  TD3Agent a = make_agent();
  a.actor = NetworkParameters::zeros(a.actor.spec);
  Rng rng(0);
  const Action act = td3_select_action(a, Vector::Ones(3), rng, false);
  EXPECT_EQ(act, kPendulum.action_mid());
}

TEST(Actor, NoiselessSelectionIsDeterministic) {
  const TD3Agent a = make_agent();
  Rng r1(0), r2(99);
  const Vector obs = Vector::LinSpaced(3, -0.5, 0.5);
  EXPECT_EQ(td3_select_action(a, obs, r1, false), td3_select_action(a, obs, r2, false));
}

// Noise std is exploration_noise_std times max |action| (the half-range).
TEST(Actor, ExplorationNoiseScale) {
  TD3Agent a = make_agent();
  a.actor = NetworkParameters::zeros(a.actor.spec);
  Rng rng(17);
  double sum = 0, sq = 0;
  constexpr int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const double u = td3_select_action(a, Vector::Zero(3), rng, true)(0);
    sum += u;
    sq += u * u;
  }
  const double mean = sum / draws;
  const double sd = std::sqrt(sq / draws - mean * mean);
  const double expected = 0.1 * kPendulum.action_half_range()(0);
  EXPECT_NEAR(sd, expected, 0.1 * expected);
}

TEST(Actor, ScaleActionMapsEndpoints) {
  EXPECT_EQ(scale_action(kPendulum, Vector::Constant(1, -1.0))(0), -2.0);
  EXPECT_EQ(scale_action(kPendulum, Vector::Constant(1, 1.0))(0), 2.0);
  EXPECT_EQ(scale_action(kPendulum, Vector::Constant(1, 0.0))(0), 0.0);
}

TEST(TD3, CreateCopiesTargets) {
  const TD3Agent a = make_agent();
  EXPECT_EQ(a.actor, a.actor_target);
  EXPECT_EQ(a.critic1, a.critic1_target);
  EXPECT_EQ(a.critic2, a.critic2_target);
  EXPECT_FALSE(a.critic1 == a.critic2);
}

TEST(TD3, TargetForTimeLimitTransition) {
  TD3Config cfg;
  cfg.gamma = 0.9;
  TD3Agent a = make_agent(1, cfg);
  make_constant(a.critic1_target, 2.0);
  make_constant(a.critic2_target, 2.0);
  Transition t = batch_of(1, 3)[0];
  t.reward = 1.0;
  t.done = true;
  t.done_reason = DoneReason::time_limit;
  Rng rng(0);
  const auto losses = td3_update(a, std::vector<Transition>{t}, rng);
  EXPECT_DOUBLE_EQ(losses.target_mean, 2.8);
}

TEST(TD3, TargetUsesTwinMinimum) {
  TD3Config cfg;
  cfg.gamma = 0.5;
  TD3Agent a = make_agent(1, cfg);
  make_constant(a.critic1_target, 3.0);
  make_constant(a.critic2_target, -1.0);
  auto batch = batch_of(8, 4);
  for (auto& t : batch) t.reward = 0.0;
  Rng rng(0);
  EXPECT_DOUBLE_EQ(td3_update(a, batch, rng).target_mean, -0.5);

  TD3Agent b = make_agent(1, cfg);
  make_constant(b.critic1_target, -4.0);
  make_constant(b.critic2_target, 6.0);
  EXPECT_DOUBLE_EQ(td3_update(b, batch, rng).target_mean, -2.0);
}

TEST(TD3, ZeroResidualLeavesCritics) {
  TD3Config cfg;
  cfg.gamma = 0.9;
  TD3Agent a = make_agent(1, cfg);
  auto batch = batch_of(16, 5);
  for (auto& t : batch) t.reward = 1.0;
  make_constant(a.critic1_target, 2.0);
  make_constant(a.critic2_target, 2.0);
  make_constant(a.critic1, 1.0 + 0.9 * 2.0);
  make_constant(a.critic2, 1.0 + 0.9 * 2.0);
  const TD3Agent before = a;
  Rng rng(0);
  const auto losses = td3_update(a, batch, rng);
  EXPECT_EQ(losses.critic1_loss, 0.0);
  EXPECT_EQ(a.critic1, before.critic1);
  EXPECT_EQ(a.critic2, before.critic2);
}

TEST(TD3, DelayedActorAndTargets) {
  TD3Agent a = make_agent();
  const TD3Agent before = a;
  Rng rng(0);
  const auto batch = batch_of(32, 6);
  const auto first = td3_update(a, batch, rng);
  EXPECT_EQ(a.update_count, 1);
  EXPECT_FALSE(first.actor_loss.has_value());
  EXPECT_EQ(a.actor, before.actor);
  EXPECT_EQ(a.actor_target, before.actor_target);
  EXPECT_EQ(a.critic1_target, before.critic1_target);
  EXPECT_EQ(a.critic2_target, before.critic2_target);
  EXPECT_FALSE(a.critic1 == before.critic1);

  const auto second = td3_update(a, batch, rng);
  EXPECT_EQ(a.update_count, 2);
  EXPECT_TRUE(second.actor_loss.has_value());
  EXPECT_FALSE(a.actor == before.actor);
  EXPECT_FALSE(a.actor_target == before.actor_target);
}

TEST(TD3, SoftUpdateContraction) {
  TD3Agent a = make_agent();
  // put the targets well away from the live networks first
  Rng init(50);
  a.actor_target = NetworkParameters::init_uniform(a.actor.spec, init);
  a.actor_optimizer.learning_rate = 0.0;
  a.critic1_optimizer.learning_rate = 0.0;
  a.critic2_optimizer.learning_rate = 0.0;
  const auto before = a.actor_target.blocks.flatten();
  const auto live = a.actor.blocks.flatten();
  Rng rng(0);
  const auto batch = batch_of(8, 7);
  td3_update(a, batch, rng);
  td3_update(a, batch, rng);
  ASSERT_EQ(a.actor.blocks.flatten(), live);
  const auto after = a.actor_target.blocks.flatten();
  const double tau = a.config.tau;
  for (std::size_t i = 0; i < live.size(); ++i)
    EXPECT_NEAR(std::abs(after[i] - live[i]), (1 - tau) * std::abs(before[i] - live[i]), 1e-15);
}

TEST(TD3, ActorStepAscendsFrozenCritic) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TD3Config cfg;
    cfg.learning_rate = 1e-5;
    TD3Agent a = make_agent(seed, cfg);
    a.critic1_optimizer.learning_rate = 0.0;
    a.critic2_optimizer.learning_rate = 0.0;
    const auto list = batch_of(64, seed + 10);
    const Batch b = Batch::from_transitions(list);
    Rng rng(0);
    td3_update(a, b, rng);
    const double before = mean_q1_of_actor(a, b);
    td3_update(a, b, rng);
    EXPECT_GE(mean_q1_of_actor(a, b), before) << "seed " << seed;
  }
}

TEST(TD3, UpdateSequenceIsDeterministic) {
  auto run = [] {
    TD3Agent a = make_agent(3);
    Rng rng(8);
    for (int i = 0; i < 10; ++i) td3_update(a, batch_of(32, 100 + i), rng);
    return a;
  };
  EXPECT_EQ(run(), run());
}

TEST(TD3, NonFiniteLossAborts) {
  TD3Agent a = make_agent();
  auto batch = batch_of(4, 9);
  batch[2].reward = std::numeric_limits<double>::infinity();
  Rng rng(0);
  try {
    td3_update(a, batch, rng);
    FAIL() << "expected NonFiniteError";
  } catch (const NonFiniteError& e) {
    EXPECT_NE(std::string(e.what()).find("reward"), std::string::npos) << e.what();
  }
}

TEST(TD3, EmptyBatchRejected) {
  TD3Agent a = make_agent();
  Rng rng(0);
  EXPECT_THROW(td3_update(a, std::vector<Transition>{}, rng), ContractViolation);
}

TEST(Expert, ScriptedUprightIsZero) {
  Vector obs(3);
  obs << 1.0, 0.0, 0.0;
  EXPECT_EQ(expert_action(ExpertPolicy::scripted(), kPendulum, obs)(0), 0.0);
}

TEST(Expert, ClonedOutputWithinBounds) {
  Rng rng(21);
  auto params = NetworkParameters::init_uniform(actor_network_spec(kPendulum, {16, 16}), rng);
  for (auto& w : params.blocks.weights) w *= 20.0;
  const auto expert = ExpertPolicy::cloned(params);
  for (int i = 0; i < 10000; ++i) {
    Vector obs(3);
    for (auto& v : obs) v = rng.uniform(-10, 10);
    const double u = expert_action(expert, kPendulum, obs)(0);
    EXPECT_GE(u, -2.0);
    EXPECT_LE(u, 2.0);
  }
}

TEST(BehaviorCloning, RecoversLinearTeacher) {
  Rng data(31);
  Demonstrations d{Matrix(3, 10000), Matrix(1, 10000)};
  for (int j = 0; j < 10000; ++j) {
    for (int i = 0; i < 3; ++i) d.observations(i, j) = data.uniform(-1, 1);
    d.actions(0, j) = std::clamp(0.5 * d.observations(0, j), -2.0, 2.0);
  }
  Rng rng(1);
  const BcResult r = bc_train(d, actor_network_spec(kPendulum, {32, 32}), kPendulum, {50, 256, 1e-3}, rng);
  EXPECT_LT(r.final_mse, 1e-3);
  EXPECT_EQ(r.expert.kind, ExpertKind::cloned);
}

TEST(BehaviorCloning, OverfitsSinglePoint) {
  Vector obs(3);
  obs << 0.3, -0.2, 1.0;
  Demonstrations d{obs.replicate(1, 64), Matrix::Constant(1, 64, 0.7)};
  Rng rng(2);
  const BcResult r = bc_train(d, actor_network_spec(kPendulum, {16, 16}), kPendulum, {1000, 64, 1e-3}, rng);
  EXPECT_NEAR(expert_action(r.expert, kPendulum, obs)(0), 0.7, 1e-3);
}

TEST(BehaviorCloning, EmptyDemosRejected) {
  Rng rng(0);
  const Demonstrations d{Matrix(3, 0), Matrix(1, 0)};
  EXPECT_ANY_THROW(bc_train(d, actor_network_spec(kPendulum, {8}), kPendulum, {}, rng));
}

TEST(BehaviorCloning, DimensionMismatchRejected) {
  Rng rng(0);
  const Demonstrations d{Matrix::Zero(4, 10), Matrix::Zero(1, 10)};
  EXPECT_THROW(bc_train(d, actor_network_spec(kPendulum, {8}), kPendulum, {}, rng), ContractViolation);
}
