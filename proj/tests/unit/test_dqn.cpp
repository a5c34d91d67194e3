#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "podscale/dqn_agent.hpp"
#include "podscale/error.hpp"

using namespace podscale;

namespace {

constexpr int kHistory = 2;
constexpr int kInput = kObservationVariables * kHistory;

Observation obs_with(double v) {
  Observation o(kHistory);
  o.at(ObsVar::Limit, 0) = v;
  return o;
}

// Forces the Q-network to output `q` for every input by zeroing the last
// layer's weights and setting its bias.
void pin_q(DqnAgent& agent, const Eigen::Vector3d& q) {
  auto& last = agent.q_network().params().back();
  last.weight.setZero();
  last.bias = q;
}

DqnConfig small_config() {
  DqnConfig c;
  c.hidden = {8};
  c.batch_size = 4;
  c.buffer_capacity = 16;
  return c;
}

}  // namespace

TEST(DqnAction, DeltaMapping) {
  EXPECT_EQ(dqn_action_delta(0, 25), -25);
  EXPECT_EQ(dqn_action_delta(1, 25), 0);
  EXPECT_EQ(dqn_action_delta(2, 25), 25);
  EXPECT_THROW(dqn_action_delta(3, 25), StateError);
}

TEST(DqnAction, GreedyArgmaxAndTieBreak) {
  Rng init(1), rng(2);
  DqnAgent agent(kInput, small_config(), init);
  pin_q(agent, {0.1, 0.9, 0.3});
  EXPECT_EQ(agent.select_action(obs_with(0.2), false, rng), 1);
  agent.set_epsilon(0.0);
  EXPECT_EQ(agent.select_action(obs_with(0.2), true, rng), 1);
  pin_q(agent, {0.5, 0.5, 0.1});
  EXPECT_EQ(agent.select_action(obs_with(0.2), false, rng), 0);
}

TEST(DqnAction, FullExplorationIsUniform) {
  Rng init(1), rng(3);
  DqnAgent agent(kInput, small_config(), init);
  agent.set_epsilon(1.0);
  std::map<int, int> counts;
  const int n = 10000;
  for (int i = 0; i < n; ++i) ++counts[agent.select_action(obs_with(0.1), true, rng)];
  const double p = 1.0 / 3.0, sd = std::sqrt(n * p * (1 - p));
  for (int a = 0; a < 3; ++a) EXPECT_NEAR(counts[a], n * p, 3 * sd);
}

TEST(DqnEpsilon, Schedule) {
  Rng init(1);
  DqnAgent agent(kInput, small_config(), init);
  EXPECT_DOUBLE_EQ(agent.decay_epsilon(0), 1.0);
  EXPECT_NEAR(agent.decay_epsilon(10), 0.5987, 5e-5);
  EXPECT_DOUBLE_EQ(agent.decay_epsilon(1000), 0.05);
  double previous = 2.0;
  for (int e = 0; e < 100; ++e) {
    const double eps = agent.decay_epsilon(e);
    EXPECT_LE(eps, previous);
    previous = eps;
  }
}

TEST(DqnLearn, GammaZeroTargetIsReward) {
  Rng init(1);
  DqnConfig c = small_config();
  c.gamma = 0.0;
  DqnAgent agent(kInput, c, init);
  pin_q(agent, Eigen::Vector3d::Zero());
  std::vector<Transition> ts;
  for (int i = 0; i < 4; ++i) ts.push_back({obs_with(0.1 * i), i % 3, 1.0, obs_with(0.5)});
  std::vector<const Transition*> batch;
  for (const auto& t : ts) batch.push_back(&t);
  EXPECT_DOUBLE_EQ(agent.learn(batch), 1.0);
}

TEST(DqnLearn, SoftUpdateAfterLearn) {
  for (double tau : {0.0, 1.0}) {
    Rng init(4);
    DqnConfig c = small_config();
    c.tau = tau;
    DqnAgent agent(kInput, c, init);
    const nn::Mlp target_before = agent.target_network();
    std::vector<Transition> ts;
    for (int i = 0; i < 4; ++i) ts.push_back({obs_with(0.2 * i), 2, 0.5, obs_with(0.1)});
    std::vector<const Transition*> batch;
    for (const auto& t : ts) batch.push_back(&t);
    agent.learn(batch);
    if (tau == 0.0) {
      EXPECT_TRUE(agent.target_network() == target_before);
    } else {
      EXPECT_TRUE(agent.target_network() == agent.q_network());
    }
  }
}

TEST(DqnLearn, RepeatedBatchLossTrendsDown) {
  Rng init(5);
  DqnConfig c = small_config();
  c.tau = 0.0;  // frozen target
  c.learning_rate = 1e-2;
  DqnAgent agent(kInput, c, init);
  std::vector<Transition> ts;
  for (int i = 0; i < 4; ++i) ts.push_back({obs_with(0.25 * i), i % 3, 1.0 - 0.5 * i, obs_with(0.3)});
  std::vector<const Transition*> batch;
  for (const auto& t : ts) batch.push_back(&t);
  std::vector<double> losses;
  for (int i = 0; i < 500; ++i) losses.push_back(agent.learn(batch));
  EXPECT_LT(losses.back(), 0.1 * losses.front());
  EXPECT_LT(losses[200], losses[100]);
}

TEST(DqnLearn, UnderfullBufferIsNoOp) {
  Rng init(1), rng(1);
  DqnAgent agent(kInput, small_config(), init);
  agent.store({obs_with(0), 1, 0.0, obs_with(0)});
  const nn::Mlp before = agent.q_network();
  EXPECT_FALSE(agent.learn_from_buffer(rng).has_value());
  EXPECT_TRUE(agent.q_network() == before);
}

TEST(ReplayBuffer, FifoEviction) {
  ReplayBuffer b(3);
  for (int i = 0; i < 5; ++i) b.push({obs_with(i), 1, static_cast<double>(i), obs_with(i)});
  EXPECT_EQ(b.size(), 3u);
  const auto items = b.contents();
  ASSERT_EQ(items.size(), 3u);
  EXPECT_EQ(items[0]->reward, 2.0);
  EXPECT_EQ(items[1]->reward, 3.0);
  EXPECT_EQ(items[2]->reward, 4.0);
}

TEST(ReplayBuffer, SamplingWithoutReplacementAndUniform) {
  ReplayBuffer b(10);
  for (int i = 0; i < 10; ++i) b.push({obs_with(0), 1, static_cast<double>(i), obs_with(0)});
  Rng rng(12);
  std::vector<int> hits(10, 0);
  const int draws = 20000;
  for (int d = 0; d < draws; ++d) {
    const auto s = b.sample(4, rng);
    std::set<const Transition*> unique(s.begin(), s.end());
    ASSERT_EQ(unique.size(), 4u);
    for (const auto* t : s) ++hits[static_cast<std::size_t>(t->reward)];
  }
  // each item is in a sample with probability 4/10
  const double p = 0.4, sd = std::sqrt(draws * p * (1 - p));
  for (int h : hits) EXPECT_NEAR(h, draws * p, 4 * sd);
  EXPECT_THROW(b.sample(11, rng), StateError);
}

TEST(DqnCheckpoint, RoundTrip) {
  Rng init(9);
  DqnAgent agent(kInput, small_config(), init);
  agent.set_epsilon(0.3);
  const DqnAgent back = DqnAgent::from_json(nlohmann::json::parse(agent.to_json().dump()));
  EXPECT_TRUE(back.q_network() == agent.q_network());
  EXPECT_TRUE(back.target_network() == agent.target_network());
  EXPECT_EQ(back.epsilon(), 0.3);
  EXPECT_EQ(back.config().step_mc, agent.config().step_mc);
  EXPECT_THROW(DqnAgent::from_json({{"kind", "continuous"}}), CheckpointError);
}
