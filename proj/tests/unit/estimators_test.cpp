#include "rnpg/advantage.hpp"
#include "rnpg/estimators.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace rnpg;

namespace {

constexpr double kGamma = 0.5;

State scalar(double v) {
  State s(1);
  s[0] = v;
  return s;
}

AdvantageFn lqc_adv() {
  return [](const Eigen::VectorXd& th, const State& s, Action a) {
    return lqc_advantage(th[0], s[0], a);
  };
}

EstimatorOptions lqc_opts() {
  EstimatorOptions o;
  o.gamma = kGamma;
  o.epsilon = 0.01;
  o.advantage = lqc_adv();
  return o;
}

Batch lqc_batch(const Policy& p, double theta, int n, int iteration, Rng& rng) {
  Lqc env(kGamma);
  Batch b;
  b.behavior = {PolicyKind::gaussian_shift, Eigen::VectorXd::Constant(1, theta)};
  b.iteration = iteration;
  b.mode = SamplingMode::iid;
  b.samples = sample_occupancy_iid(env, p, b.behavior.theta, n, rng, lqc_adv());
  b.units = n;
  return b;
}

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

TEST(Ratio, IdentityAtBehavior) {
  GaussianShiftPolicy p;
  Rng rng(1);
  const auto b = lqc_batch(p, 0.3, 20, 1, rng);
  for (const auto& s : b.samples) {
    EXPECT_EQ(likelihood_ratio_hat(p, b.behavior.theta, s), 1.0);
  }
}

TEST(Ratio, GaussianShiftExample) {
  GaussianShiftPolicy p;
  Sample s;
  s.state = scalar(0.0);
  s.action = 0.0;
  s.behavior_logp = p.logp(Eigen::VectorXd::Zero(1), s.state, s.action);
  // pi_theta(0|0) = phi(0 + 0 - theta): phi(-0.5) / phi(0).
  const double expected = normal_pdf(-0.5) / normal_pdf(0.0);
  const double r = likelihood_ratio_hat(p, Eigen::VectorXd::Constant(1, 0.5), s);
  EXPECT_NEAR(r, expected, 1e-15);
  EXPECT_NEAR(r, std::exp(-0.125), 1e-15);
  EXPECT_NEAR(r, 0.8825, 1e-4);
}

TEST(Ratio, ClippingAndOverflow) {
  GaussianShiftPolicy p;
  Sample s;
  s.state = scalar(0.0);
  s.action = 3.0;
  s.behavior_logp = p.logp(Eigen::VectorXd::Zero(1), s.state, s.action);
  const Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, 3.0);
  EXPECT_GT(likelihood_ratio_hat(p, theta, s), 10.0);
  const double clipped = likelihood_ratio_hat(p, theta, s, 10.0);
  EXPECT_EQ(clipped, 10.0);
  s.behavior_logp = -1000.0;
  EXPECT_THROW(likelihood_ratio_hat(p, theta, s), std::overflow_error);
}

TEST(Window, EvictsOldestAndOrdersRecent) {
  GaussianShiftPolicy p;
  Rng rng(2);
  ReplayWindow w(3);
  for (int it = 1; it <= 5; ++it) w.push(lqc_batch(p, 0.1 * it, 4, it, rng));
  EXPECT_EQ(w.size(), 3);
  const auto r = w.recent(2);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0]->iteration, 4);
  EXPECT_EQ(r[1]->iteration, 5);
  EXPECT_EQ(w.recent(10).size(), 3u);
  EXPECT_EQ(w.batches().front().iteration, 3);
}

TEST(Window, RejectsBadPushes) {
  GaussianShiftPolicy p;
  Rng rng(3);
  ReplayWindow w(2);
  w.push(lqc_batch(p, 0.0, 4, 5, rng));
  EXPECT_THROW(w.push(lqc_batch(p, 0.0, 4, 5, rng)), std::invalid_argument);
  Batch empty;
  empty.iteration = 9;
  EXPECT_THROW(w.push(empty), std::invalid_argument);
  EXPECT_THROW(ReplayWindow(0), std::invalid_argument);
}

TEST(Window, EmptyWindowEstimatorsThrow) {
  GaussianShiftPolicy p;
  ReplayWindow w(2);
  const auto opts = lqc_opts();
  EXPECT_THROW(grad_estimate_reuse(w, p, Eigen::VectorXd::Zero(1), 1, opts), std::invalid_argument);
  EXPECT_THROW(fim_estimate_reuse(w, p, Eigen::VectorXd::Zero(1), 1, opts), std::invalid_argument);
}

TEST(Window, CheckpointRoundTrip) {
  SoftmaxMlpPolicy p(4, 32, 2);
  Cartpole env;
  Rng rng(4);
  ReplayWindow w(3);
  for (int it = 1; it <= 4; ++it) {
    Batch b;
    b.behavior = {PolicyKind::softmax_mlp, p.initial_params(rng)};
    b.iteration = it;
    b.mode = SamplingMode::single_path;
    b.samples = sample_single_path(env, p, b.behavior.theta, 2, rng);
    if (it % 2 == 0) b.fim_samples = sample_single_path(env, p, b.behavior.theta, 1, rng);
    b.units = 2;
    w.push(std::move(b));
  }
  std::stringstream buf;
  write_window(w, buf);
  const ReplayWindow back = read_window(buf);
  ASSERT_EQ(back.size(), w.size());
  EXPECT_EQ(back.capacity(), w.capacity());
  for (int i = 0; i < w.size(); ++i) {
    const auto& a = w.batches()[i];
    const auto& b = back.batches()[i];
    EXPECT_EQ(a.iteration, b.iteration);
    EXPECT_EQ(a.mode, b.mode);
    EXPECT_EQ(a.units, b.units);
    EXPECT_EQ(a.behavior.theta, b.behavior.theta);
    ASSERT_EQ(a.samples.size(), b.samples.size());
    ASSERT_EQ(a.fim_samples.size(), b.fim_samples.size());
    for (std::size_t j = 0; j < a.samples.size(); ++j) {
      EXPECT_EQ(a.samples[j].state, b.samples[j].state);
      EXPECT_EQ(a.samples[j].action, b.samples[j].action);
      EXPECT_EQ(a.samples[j].behavior_logp, b.samples[j].behavior_logp);
      EXPECT_EQ(a.samples[j].advantage, b.samples[j].advantage);
      EXPECT_EQ(a.samples[j].discount_weight, b.samples[j].discount_weight);
      EXPECT_EQ(a.samples[j].reward, b.samples[j].reward);
    }
  }
  std::stringstream junk("not a checkpoint");
  EXPECT_THROW(read_window(junk), std::runtime_error);
}

TEST(Gradient, MatchesHandSumOverTwoBatches) {
  GaussianShiftPolicy p;
  Rng rng(5);
  ReplayWindow w(2);
  w.push(lqc_batch(p, 0.4, 3, 1, rng));
  w.push(lqc_batch(p, 0.1, 3, 2, rng));
  const double theta = 0.25;
  double sum = 0.0;
  for (const auto& b : w.batches()) {
    for (const auto& s : b.samples) {
      const double x = s.state[0] + s.action;
      const double score = x - theta;
      const double ratio = normal_pdf(x - theta) / normal_pdf(x - b.behavior.theta[0]);
      const double adv = 1.0 + theta * theta - x * x;
      sum += ratio * adv * score;
    }
  }
  const double expected = sum / (1.0 - kGamma) / 6.0;
  const auto g = grad_estimate_reuse(w, p, Eigen::VectorXd::Constant(1, theta), 2, lqc_opts());
  EXPECT_NEAR(g.grad[0], expected, 1e-12 * std::max(1.0, std::abs(expected)));
  EXPECT_EQ(g.ratios.count, 6u);
}

TEST(Gradient, PartialWindowAveragesAvailable) {
  GaussianShiftPolicy p;
  Rng rng(6);
  ReplayWindow w(10);
  w.push(lqc_batch(p, 0.2, 5, 1, rng));
  const auto opts = lqc_opts();
  const Eigen::VectorXd th = Eigen::VectorXd::Constant(1, 0.2);
  EXPECT_EQ(grad_estimate_reuse(w, p, th, 10, opts).grad,
            grad_estimate_reuse(w, p, th, 1, opts).grad);
}

TEST(Gradient, ReuseSizeOneIsBitIdenticalToVanilla) {
  SoftmaxMlpPolicy p(4, 32, 2);
  Cartpole env;
  Rng rng(7);
  const Eigen::VectorXd theta = p.initial_params(rng);
  ReplayWindow w(1);
  Batch b;
  b.behavior = {PolicyKind::softmax_mlp, theta};
  b.iteration = 1;
  b.mode = SamplingMode::single_path;
  b.samples = sample_single_path(env, p, theta, 4, rng);
  b.units = 4;
  w.push(b);
  EstimatorOptions opts;
  const auto reuse = grad_estimate_reuse(w, p, theta, 1, opts).grad;
  const auto vanilla = grad_estimate_vanilla(w.newest(), p, theta, opts);
  EXPECT_EQ(reuse, vanilla);
  EXPECT_EQ(fim_estimate_reuse(w, p, theta, 1, opts), fim_estimate_vanilla(w.newest(), p, theta, opts));
}

TEST(Gradient, UnbiasedOnLqc) {
  GaussianShiftPolicy p;
  for (double theta : {-1.0, 0.0, 1.0}) {
    Rng rng(100 + static_cast<int>(theta * 10));
    const int n = 200000;
    const Batch b = lqc_batch(p, theta, n, 1, rng);
    const Eigen::VectorXd th = Eigen::VectorXd::Constant(1, theta);
    const double est = grad_estimate_vanilla(b, p, th, lqc_opts())[0];
    // Spread of the per-sample terms G = A * score / (1 - gamma).
    double m = 0.0, m2 = 0.0;
    for (const auto& s : b.samples) {
      const double x = s.state[0] + s.action;
      const double gi = (1.0 + theta * theta - x * x) * (x - theta) / (1.0 - kGamma);
      m += gi;
      m2 += gi * gi;
    }
    m /= n;
    const double se = std::sqrt((m2 / n - m * m) / n);
    EXPECT_NEAR(est, m, 1e-9 * std::max(1.0, std::abs(m)));
    EXPECT_NEAR(est, -2.0 * theta / (1.0 - kGamma), 4.0 * se) << "theta=" << theta;
  }
}

TEST(Fim, ChiSquareMean) {
  GaussianShiftPolicy p;
  Rng rng(8);
  const int n = 200000;
  const Batch b = lqc_batch(p, 0.7, n, 1, rng);
  const auto opts = lqc_opts();
  const double f = fim_estimate_vanilla(b, p, b.behavior.theta, opts)(0, 0);
  EXPECT_NEAR(f - opts.epsilon, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(Fim, ZeroScoresGiveRegularizer) {
  GaussianShiftPolicy p;
  Batch b;
  b.behavior = {PolicyKind::gaussian_shift, Eigen::VectorXd::Constant(1, 0.5)};
  b.iteration = 1;
  b.units = 3;
  for (double s : {-1.0, 0.0, 2.0}) {
    Sample x;
    x.state = scalar(s);
    x.action = 0.5 - s;  // a + s = theta, so the score vanishes
    x.behavior_logp = p.logp(b.behavior.theta, x.state, x.action);
    b.samples.push_back(x);
  }
  ReplayWindow w(1);
  w.push(b);
  EstimatorOptions opts;
  opts.epsilon = 0.01;
  EXPECT_EQ(fim_estimate_reuse(w, p, b.behavior.theta, 1, opts)(0, 0), 0.01);
}

TEST(Fim, SymmetricWithEigenvaluesAboveEpsilon) {
  SoftmaxMlpPolicy p(4, 32, 2);
  Cartpole env;
  Rng rng(9);
  ReplayWindow w(5);
  Eigen::VectorXd theta;
  for (int it = 1; it <= 5; ++it) {
    theta = p.initial_params(rng);
    Batch b;
    b.behavior = {PolicyKind::softmax_mlp, theta};
    b.iteration = it;
    b.mode = SamplingMode::single_path;
    b.samples = sample_single_path(env, p, theta, 2, rng);
    b.units = 2;
    w.push(std::move(b));
  }
  EstimatorOptions opts;
  opts.epsilon = 1e-3;
  const Eigen::MatrixXd f = fim_estimate_reuse(w, p, theta, 5, opts);
  EXPECT_LE((f - f.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(f);
  EXPECT_GE(eig.eigenvalues().minCoeff(), opts.epsilon - 1e-10);

  const auto report = natural_gradient_reuse(w, p, theta, 5, 5, opts);
  EXPECT_LE(report.solver_residual, 1e-8 * std::max(report.grad_hat.norm(), 1e-300));
}

TEST(Estimators, PermutationInvariant) {
  GaussianShiftPolicy p;
  Rng rng(10);
  Batch b = lqc_batch(p, 0.3, 500, 1, rng);
  Batch shuffled = b;
  std::mt19937_64 eng(3);
  std::shuffle(shuffled.samples.begin(), shuffled.samples.end(), eng);
  const auto opts = lqc_opts();
  const Eigen::VectorXd th = Eigen::VectorXd::Constant(1, 0.1);
  ReplayWindow w1(1), w2(1);
  w1.push(b);
  w2.push(shuffled);
  const double g1 = grad_estimate_reuse(w1, p, th, 1, opts).grad[0];
  const double g2 = grad_estimate_reuse(w2, p, th, 1, opts).grad[0];
  EXPECT_NEAR(g1, g2, 1e-12 * std::abs(g1));
  const double f1 = fim_estimate_reuse(w1, p, th, 1, opts)(0, 0);
  const double f2 = fim_estimate_reuse(w2, p, th, 1, opts)(0, 0);
  EXPECT_NEAR(f1, f2, 1e-12 * f1);
}

TEST(Estimators, VarianceShrinksWithReuseAtFrozenTheta) {
  // Frozen theta: every ratio is 1, so K batches average K*B i.i.d. terms.
  GaussianShiftPolicy p;
  Rng rng(11);
  const int draws = 4000, B = 5, K = 10;
  const auto opts = lqc_opts();
  const Eigen::VectorXd th = Eigen::VectorXd::Zero(1);
  auto variance_at = [&](int k) {
    double m = 0.0, m2 = 0.0;
    for (int r = 0; r < draws; ++r) {
      ReplayWindow w(k);
      for (int it = 1; it <= k; ++it) w.push(lqc_batch(p, 0.0, B, it, rng));
      const double g = grad_estimate_reuse(w, p, th, k, opts).grad[0];
      m += g;
      m2 += g * g;
    }
    m /= draws;
    return (m2 / draws - m * m) * draws / (draws - 1.0);
  };
  const double v1 = variance_at(1);
  const double vk = variance_at(K);
  EXPECT_LE(vk, v1 / K * 1.15);
}

TEST(NaturalDirection, IdentityAndScalar) {
  Eigen::VectorXd g(3);
  g << 1.0, -2.0, 0.5;
  EXPECT_EQ(natural_direction(g, Eigen::MatrixXd::Identity(3, 3)).direction, g);
  Eigen::MatrixXd f(1, 1);
  f(0, 0) = 0.01 + 2.5;
  EXPECT_NEAR(natural_direction(Eigen::VectorXd::Constant(1, 3.0), f).direction[0], 3.0 / 2.51, 1e-15);
}

TEST(NaturalDirection, RandomSpdResidual) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 50;
    Eigen::MatrixXd m(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
    const Eigen::MatrixXd a = m * m.transpose() + 1e-3 * Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd g(d);
    for (int i = 0; i < d; ++i) g[i] = rng.normal();
    const auto nd = natural_direction(g, a);
    // Residual recomputed independently of the reported one.
    EXPECT_LE((a * nd.direction - g).norm(), 1e-8 * g.norm());
  }
}

TEST(NaturalDirection, NotPositiveDefiniteThrows) {
  Eigen::MatrixXd f = Eigen::MatrixXd::Identity(2, 2);
  f(1, 1) = -1.0;
  EXPECT_THROW(natural_direction(Eigen::VectorXd::Ones(2), f), std::runtime_error);
}
