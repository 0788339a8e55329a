#include "rnpg/advantage.hpp"
#include "rnpg/env.hpp"
#include "rnpg/policy.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace rnpg;

namespace {

State cart(double x, double xd, double phi, double phid) {
  State s(4);
  s << x, xd, phi, phid;
  return s;
}

State scalar(double v) {
  State s(1);
  s[0] = v;
  return s;
}

// Lqc with the discount overridden, for the degenerate gamma = 0 sampler case.
class ZeroDiscountLqc final : public Environment {
 public:
  ZeroDiscountLqc() { spec_ = inner_.spec(); spec_.gamma = 0.0; }
  const EnvSpec& spec() const override { return spec_; }
  State reset(Rng& rng) const override { return inner_.reset(rng); }
  Transition step(const State& s, Action a, int t) const override { return inner_.step(s, a, t); }

 private:
  Lqc inner_;
  EnvSpec spec_;
};

// Counts how often reset() is called.
class CountingLqc final : public Environment {
 public:
  const EnvSpec& spec() const override { return inner_.spec(); }
  State reset(Rng& rng) const override {
    ++resets;
    return inner_.reset(rng);
  }
  Transition step(const State& s, Action a, int t) const override { return inner_.step(s, a, t); }
  mutable int resets = 0;

 private:
  Lqc inner_;
};

}  // namespace

TEST(Cartpole, HandEvaluatedEulerStep) {
  // Classic dynamics evaluated by hand at the origin, pushing right.
  const double g = 9.8, mc = 1.0, mp = 0.1, l = 0.5, f = 10.0, dt = 0.02;
  const double total = mc + mp;
  const double temp = f / total;  // sin(0) = 0, phi_dot = 0
  const double phi_acc = (g * 0.0 - 1.0 * temp) / (l * (4.0 / 3.0 - mp * 1.0 / total));
  const double x_acc = temp - mp * l * phi_acc * 1.0 / total;

  const Transition tr = cartpole_step(cart(0, 0, 0, 0), 1.0, 0);
  EXPECT_DOUBLE_EQ(tr.next_state[0], 0.0);
  EXPECT_NEAR(tr.next_state[1], dt * x_acc, 1e-15);
  EXPECT_DOUBLE_EQ(tr.next_state[2], 0.0);
  EXPECT_NEAR(tr.next_state[3], dt * phi_acc, 1e-15);
  EXPECT_NEAR(tr.next_state[1], 0.195122, 1e-6);
  EXPECT_NEAR(tr.next_state[3], -0.292683, 1e-6);
  EXPECT_EQ(tr.reward, 1.0);
  EXPECT_FALSE(tr.terminal);
}

TEST(Cartpole, LeftPushMirrorsRight) {
  const Transition r = cartpole_step(cart(0, 0, 0, 0), 1.0, 0);
  const Transition l = cartpole_step(cart(0, 0, 0, 0), 0.0, 0);
  EXPECT_DOUBLE_EQ(l.next_state[1], -r.next_state[1]);
  EXPECT_DOUBLE_EQ(l.next_state[3], -r.next_state[3]);
}

TEST(Cartpole, AngleBeyondThresholdTerminates) {
  EXPECT_TRUE(cartpole_step(cart(0, 0, 0.3, 0), 1.0, 0).terminal);
  EXPECT_TRUE(cartpole_step(cart(2.5, 0, 0, 0), 1.0, 0).terminal);
}

TEST(Cartpole, EpisodeCapTerminates) {
  EXPECT_FALSE(cartpole_step(cart(0, 0, 0, 0), 1.0, 198).terminal);
  EXPECT_TRUE(cartpole_step(cart(0, 0, 0, 0), 1.0, 199).terminal);
}

TEST(Cartpole, BitDeterministic) {
  const State s = cart(0.01, -0.2, 0.03, 0.1);
  const Transition a = cartpole_step(s, 0.0, 7);
  const Transition b = cartpole_step(s, 0.0, 7);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(a.next_state[i], b.next_state[i]);
}

TEST(Cartpole, RejectsBadInputs) {
  EXPECT_THROW(cartpole_step(cart(0, NAN, 0, 0), 1.0, 0), std::invalid_argument);
  EXPECT_THROW(cartpole_step(cart(0, 0, 0, 0), 0.5, 0), std::invalid_argument);
}

TEST(Cartpole, ResetWithinBox) {
  Cartpole env;
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const State s = env.reset(rng);
    ASSERT_EQ(s.size(), 4);
    ASSERT_LE(s.cwiseAbs().maxCoeff(), 0.05);
  }
}

TEST(Lqc, StepExamples) {
  auto t = lqc_step(scalar(0.0), 0.0, 0);
  EXPECT_EQ(t.next_state[0], 0.0);
  EXPECT_EQ(t.reward, 0.0);
  t = lqc_step(scalar(1.0), -1.0, 0);
  EXPECT_EQ(t.next_state[0], 0.0);
  EXPECT_EQ(t.reward, 0.0);
  t = lqc_step(scalar(0.5), 0.5, 0);
  EXPECT_EQ(t.next_state[0], 1.0);
  EXPECT_EQ(t.reward, -1.0);
  EXPECT_FALSE(t.terminal);
}

TEST(Lqc, RewardNonPositiveAndZeroOnlyAtOptimalAction) {
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const double s = rng.normal(), a = rng.normal();
    const auto t = lqc_step(scalar(s), a, 0);
    ASSERT_LE(t.reward, 0.0);
    ASSERT_EQ(t.reward == 0.0, a == -s);
  }
  EXPECT_EQ(lqc_step(scalar(0.7), -0.7, 0).reward, 0.0);
}

TEST(Geometric, ZeroDiscountAlwaysZero) {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(draw_geometric_horizon(0.0, rng), 0u);
  EXPECT_THROW(draw_geometric_horizon(1.0, rng), std::invalid_argument);
}

TEST(Geometric, SafetyCapRaises) {
  Rng rng(1);
  EXPECT_THROW(
      {
        for (int i = 0; i < 100; ++i) draw_geometric_horizon(1.0 - 1e-12, rng);
      },
      std::runtime_error);
}

TEST(Geometric, ProbabilityOfTwoAtHalf) {
  Rng rng(77);
  const int n = 100000;
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += draw_geometric_horizon(0.5, rng) == 2;
  const double p = 0.5 * 0.5 * 0.5;
  EXPECT_NEAR(static_cast<double>(hits) / n, p, 3.0 * std::sqrt(p * (1 - p) / n));
}

TEST(IidSampler, ZeroDiscountKeepsInitialPair) {
  ZeroDiscountLqc env;
  GaussianShiftPolicy policy;
  const Eigen::VectorXd theta = Eigen::VectorXd::Zero(1);
  AdvantageFn adv = [](const Eigen::VectorXd& th, const State& s, Action a) {
    return lqc_advantage(th[0], s[0], a);
  };
  Rng a(10), b(10);
  const auto samples = sample_occupancy_iid(env, policy, theta, 50, a, adv);
  // Replay the same stream by hand: T = 0, s0 ~ N(0,1), a0 ~ policy.
  for (const auto& s : samples) {
    (void)draw_geometric_horizon(0.0, b);
    const State s0 = env.reset(b);
    const Action a0 = policy.sample_action(theta, s0, b);
    ASSERT_EQ(s.state[0], s0[0]);
    ASSERT_EQ(s.action, a0);
    ASSERT_EQ(s.discount_weight, 1.0);
  }
}

TEST(IidSampler, LqcSumIsStandardNormalAtZero) {
  Lqc env;
  GaussianShiftPolicy policy;
  Rng rng(11);
  const int n = 100000;
  const auto samples = sample_occupancy_iid(env, policy, Eigen::VectorXd::Zero(1), n, rng);
  double m = 0.0, m2 = 0.0;
  for (const auto& s : samples) {
    const double x = s.state[0] + s.action;
    m += x;
    m2 += x * x;
  }
  m /= n;
  const double var = m2 / n - m * m;
  EXPECT_NEAR(m, 0.0, 3.0 / std::sqrt(n));
  EXPECT_NEAR(var, 1.0, 3.0 * std::sqrt(2.0 / n));
}

TEST(IidSampler, OneFreshRolloutPerSample) {
  CountingLqc env;
  GaussianShiftPolicy policy;
  Rng rng(12);
  const auto samples = sample_occupancy_iid(env, policy, Eigen::VectorXd::Zero(1), 25, rng);
  EXPECT_EQ(samples.size(), 25u);
  EXPECT_EQ(env.resets, 25);
}

TEST(IidSampler, ExactAdvantageIsUsed) {
  Lqc env;
  GaussianShiftPolicy policy;
  Rng rng(13);
  const Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, 0.4);
  AdvantageFn adv = [](const Eigen::VectorXd& th, const State& s, Action a) {
    return lqc_advantage(th[0], s[0], a);
  };
  for (const auto& s : sample_occupancy_iid(env, policy, theta, 20, rng, adv)) {
    EXPECT_NEAR(s.advantage, 1.0 + 0.16 - (s.state[0] + s.action) * (s.state[0] + s.action), 1e-12);
    EXPECT_DOUBLE_EQ(s.behavior_logp, policy.logp(theta, s.state, s.action));
  }
}

TEST(IidSampler, CartpoleSamplesAreLiveStates) {
  Cartpole env;
  SoftmaxMlpPolicy policy(4, 32, 2);
  Rng rng(14);
  const Eigen::VectorXd theta = policy.initial_params(rng);
  const auto samples = sample_occupancy_iid(env, policy, theta, 40, rng);
  double mean_adv = 0.0;
  for (const auto& s : samples) {
    EXPECT_LE(std::abs(s.state[0]), 2.4);
    EXPECT_LE(std::abs(s.state[2]), CartpoleConstants::angle_limit);
    mean_adv += s.advantage;
  }
  EXPECT_NEAR(mean_adv / samples.size(), 0.0, 1e-9);
}

TEST(SinglePath, DiscountWeightsFollowTimestep) {
  Cartpole env(0.9);
  SoftmaxMlpPolicy policy(4, 32, 2);
  Rng rng(15);
  const Eigen::VectorXd theta = policy.initial_params(rng);
  const auto episodes = rollout_episodes(env, policy, theta, 1, rng);
  const auto samples = advantage_reward_to_go(episodes, 0.9);
  ASSERT_EQ(samples.size(), episodes[0].steps.size());
  for (std::size_t t = 0; t < samples.size(); ++t) {
    EXPECT_DOUBLE_EQ(samples[t].discount_weight, std::pow(0.9, static_cast<double>(t)));
  }
  EXPECT_TRUE(episodes[0].steps.back().terminal);
}

TEST(SinglePath, CappedEpisodesEmitFullLength) {
  // LQC never terminates, so every episode runs to the cap.
  Lqc env(0.5, 200);
  GaussianShiftPolicy policy;
  Rng rng(16);
  const auto samples = sample_single_path(env, policy, Eigen::VectorXd::Zero(1), 4, rng);
  EXPECT_EQ(samples.size(), 4u * 200u);
}

TEST(SinglePath, DeterministicUnderSeed) {
  Cartpole env;
  SoftmaxMlpPolicy policy(4, 32, 2);
  Rng init(3);
  const Eigen::VectorXd theta = policy.initial_params(init);
  Rng a(20), b(20);
  const auto x = sample_single_path(env, policy, theta, 4, a);
  const auto y = sample_single_path(env, policy, theta, 4, b);
  ASSERT_EQ(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    ASSERT_EQ(x[i].action, y[i].action);
    ASSERT_EQ(x[i].advantage, y[i].advantage);
    for (int j = 0; j < 4; ++j) ASSERT_EQ(x[i].state[j], y[i].state[j]);
  }
}

TEST(Advantage, SingleStepEpisode) {
  Episode ep;
  Transition tr;
  tr.state = scalar(0.0);
  tr.next_state = scalar(0.0);
  tr.reward = 1.0;
  ep.steps.push_back(tr);
  ep.logps.push_back(0.0);
  const auto s = advantage_reward_to_go({ep}, 0.5);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].advantage, 0.0);
}

TEST(Advantage, ThreeUnitRewards) {
  Episode ep;
  for (int t = 0; t < 3; ++t) {
    Transition tr;
    tr.state = scalar(0.0);
    tr.next_state = scalar(0.0);
    tr.reward = 1.0;
    tr.timestep = t;
    ep.steps.push_back(tr);
    ep.logps.push_back(0.0);
  }
  // Reward-to-go summed by hand: 1 + 0.5 + 0.25, 1 + 0.5, 1.
  const double rtg[3] = {1.0 + 0.5 + 0.25, 1.0 + 0.5, 1.0};
  const double b = (rtg[0] + rtg[1] + rtg[2]) / 3.0;
  const auto s = advantage_reward_to_go({ep}, 0.5);
  ASSERT_EQ(s.size(), 3u);
  for (int t = 0; t < 3; ++t) EXPECT_NEAR(s[t].advantage, rtg[t] - b, 1e-15);
  EXPECT_NEAR(b, 1.4167, 1e-4);
  EXPECT_NEAR(s[0].advantage, 0.3333, 1e-4);
  EXPECT_NEAR(s[1].advantage, 0.0833, 1e-4);
  EXPECT_NEAR(s[2].advantage, -0.4167, 1e-4);
}

TEST(Advantage, EmptyBatchThrows) {
  EXPECT_THROW(advantage_reward_to_go({}, 0.5), std::invalid_argument);
}

TEST(Advantage, LqcClosedForm) {
  EXPECT_EQ(lqc_advantage(0.0, 0.0, 0.0), 1.0);
  // (s + a)^2 = 1 + theta^2 lies on the zero level set.
  EXPECT_NEAR(lqc_advantage(1.0, 0.0, std::sqrt(2.0)), 0.0, 1e-15);
}

TEST(EnvSpec, Validation) {
  EXPECT_THROW(Lqc(1.0), std::invalid_argument);
  EXPECT_THROW(Lqc(0.5, 0), std::invalid_argument);
  EXPECT_THROW(make_env("pendulum", 0.9), std::invalid_argument);
}
