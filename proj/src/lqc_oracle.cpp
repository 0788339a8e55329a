#include "rnpg/lqc_oracle.hpp"

#include "rnpg/rng.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace rnpg::lqc {

namespace {

void check_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0, 1)");
}

// Oracle streams never collide with training streams (those use base_seed + rep).
constexpr std::uint64_t kOracleStream = 0x4f5241434c45ULL;  // "ORACLE"

}  // namespace

double eta(double theta, double gamma) {
  check_gamma(gamma);
  return -(1.0 + theta * theta) / (1.0 - gamma);
}

double grad(double theta, double gamma) {
  check_gamma(gamma);
  return -2.0 * theta / (1.0 - gamma);
}

kernels::InverseFisherSums inverse_fisher_moments(int B, double epsilon, std::uint64_t reps,
                                                  std::uint64_t seed) {
  if (B < 1) throw std::invalid_argument("B must be >= 1");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (reps < 2) throw std::invalid_argument("need at least 2 Monte Carlo replications");
  return kernels::parallel::inverse_fisher_sums(B, epsilon, reps, Rng(seed).split(kOracleStream));
}

AsymptoticTheory theoretical_sigma(double gamma, int B, int K, double epsilon,
                                   std::uint64_t mc_reps, std::uint64_t seed) {
  check_gamma(gamma);
  if (K < 1) throw std::invalid_argument("K must be >= 1");
  if (mc_reps < kMinMonteCarloReps) {
    throw std::invalid_argument("theoretical_sigma: mc_reps must be >= 100000");
  }
  const auto sums = inverse_fisher_moments(B, epsilon, mc_reps, seed);
  const double n = static_cast<double>(sums.reps);
  const double mean_y = sums.sum_y / n;
  const double mean_y2 = sums.sum_y2 / n;
  const double mean_y4 = sums.sum_y4 / n;

  AsymptoticTheory t;
  t.B = B;
  t.K = K;
  t.gamma = gamma;
  t.epsilon = epsilon;
  t.mc_reps = mc_reps;
  t.seed = seed;
  t.sigma_eta = 10.0 / ((1.0 - gamma) * (1.0 - gamma));
  t.fbar_inv = mean_y;
  t.fbar_inv_se = std::sqrt(std::max(0.0, mean_y2 - mean_y * mean_y) / (n - 1.0));
  t.sigma1 = t.fbar_inv * t.fbar_inv * t.sigma_eta;
  t.sigma2_prime = t.sigma_eta * mean_y2;
  t.sigma2_prime_se = t.sigma_eta * std::sqrt(std::max(0.0, mean_y4 - mean_y2 * mean_y2) / (n - 1.0));
  t.sigma2 = t.sigma2_prime - t.sigma1;
  if (t.sigma2 < 0.0) throw std::logic_error("theoretical_sigma: negative Sigma_2");
  t.sigma_hat = t.sigma1 / B + t.sigma2 / (static_cast<double>(K) * B);
  t.g_matrix = -2.0 / (1.0 - gamma) * t.fbar_inv;
  t.sigma_inf = -t.sigma_hat / (2.0 * t.g_matrix);
  return t;
}

double sigma_hat_for(const AsymptoticTheory& theory, int K) {
  return theory.sigma1 / theory.B + theory.sigma2 / (static_cast<double>(K) * theory.B);
}

void write_theory_json(const AsymptoticTheory& t, const std::filesystem::path& path) {
  nlohmann::json j;
  j["sigma_eta"] = t.sigma_eta;
  j["fbar_inv"] = t.fbar_inv;
  j["fbar_inv_se"] = t.fbar_inv_se;
  j["sigma1"] = t.sigma1;
  j["sigma2_prime"] = t.sigma2_prime;
  j["sigma2_prime_se"] = t.sigma2_prime_se;
  j["sigma2"] = t.sigma2;
  j["sigma_hat"] = t.sigma_hat;
  j["g_matrix"] = t.g_matrix;
  j["sigma_inf"] = t.sigma_inf;
  j["B"] = t.B;
  j["K"] = t.K;
  j["gamma"] = t.gamma;
  j["epsilon"] = t.epsilon;
  j["mc_reps"] = t.mc_reps;
  j["seed"] = t.seed;
  std::ofstream out(path);
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

double normalized_error(double theta_n, double theta_bar, double alpha_n) {
  if (!(alpha_n > 0.0)) throw std::invalid_argument("normalized_error: alpha_n must be > 0");
  return (theta_n - theta_bar) / std::sqrt(alpha_n);
}

double theorem3_bound(double C, int K, int B, long long n, double delta,
                      const std::vector<double>& trace_vars, int d) {
  if (B < 2) throw std::invalid_argument("theorem3_bound: B must be >= 2");
  if (K < 1 || n < 1 || d < 1) throw std::invalid_argument("theorem3_bound: bad K, n or d");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("theorem3_bound: delta in (0,1)");
  if (!(C > 0.0)) throw std::invalid_argument("theorem3_bound: C must be > 0");
  if (static_cast<int>(trace_vars.size()) != K) {
    throw std::invalid_argument("theorem3_bound: need one trace per reused batch");
  }
  const double kd = K;
  const double bd = B;
  const double nd = static_cast<double>(n);
  const double log_term =
      std::log(std::numbers::pi * std::numbers::pi * nd * nd * (d + 1.0) / (3.0 * delta));
  double trace_sum = 0.0;
  for (double t : trace_vars) trace_sum += t;
  const double beta =
      std::sqrt(C * C / (kd * kd * kd * bd * (bd - 1.0)) * log_term) + trace_sum / (kd * kd * bd);
  return std::sqrt(2.0 * beta * log_term) + 2.0 * C / kd * log_term;
}

Theorem3Check theorem3_coverage(double gamma, int K, int B, long long n, double delta,
                                int replications, std::uint64_t seed) {
  check_gamma(gamma);
  if (replications < 1) throw std::invalid_argument("theorem3_coverage: replications >= 1");
  const Rng base = Rng(seed).split(kOracleStream + 1);
  const double scale = 1.0 / (1.0 - gamma);

  // G(xi, 0) = (1 - X^2) X / (1 - gamma) with X = s + a ~ N(0, 1) under the occupancy measure.
  std::vector<std::vector<std::vector<double>>> draws(static_cast<std::size_t>(replications));
  double C = std::abs(eta(0.0, gamma));
  C = std::max(C, 1.0);  // omega == 1 at frozen theta
  for (int r = 0; r < replications; ++r) {
    Rng rng = base.split(static_cast<std::uint64_t>(r));
    auto& rep = draws[static_cast<std::size_t>(r)];
    rep.assign(static_cast<std::size_t>(K), std::vector<double>(static_cast<std::size_t>(B)));
    for (auto& batch : rep) {
      for (auto& g : batch) {
        const double x = rng.normal();
        g = scale * (1.0 - x * x) * x;
        C = std::max(C, std::abs(g));
      }
    }
  }

  Theorem3Check out;
  out.replications = replications;
  out.C = C;
  for (const auto& rep : draws) {
    double total = 0.0;
    std::vector<double> traces;
    for (const auto& batch : rep) {
      double mean = 0.0;
      for (double g : batch) mean += g;
      mean /= B;
      double var = 0.0;
      for (double g : batch) var += (g - mean) * (g - mean);
      traces.push_back(var / (B - 1));
      total += mean * B;
    }
    const double lhs = std::abs(grad(0.0, gamma) - total / (static_cast<double>(K) * B));
    const double bound = theorem3_bound(C, K, B, n, delta, traces, 1);
    out.mean_lhs += lhs;
    out.mean_bound += bound;
    if (lhs <= bound) ++out.covered;
  }
  out.mean_lhs /= replications;
  out.mean_bound /= replications;
  out.frequency = static_cast<double>(out.covered) / replications;
  return out;
}

}  // namespace rnpg::lqc
