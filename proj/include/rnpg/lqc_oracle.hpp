#pragma once

// Closed-form quantities of the scalar LQC task under the gaussian_shift
// policy, and the asymptotic covariance of the normalized error of the
// reuse-based natural gradient iteration at theta_bar = 0.
//
// Nothing here depends on the training code; it is the yardstick the
// training runs are compared against.

#include "rnpg/kernels.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace rnpg::lqc {

/// eta(theta) = -(1 + theta^2) / (1 - gamma)
double eta(double theta, double gamma);
/// d eta / d theta = -2 theta / (1 - gamma)
double grad(double theta, double gamma);

struct AsymptoticTheory {
  double sigma_eta = 0.0;       // Var G(xi, 0) = 10 / (1 - gamma)^2
  double fbar_inv = 0.0;        // E[(eps + mean X_i^2)^-1]
  double fbar_inv_se = 0.0;
  double sigma1 = 0.0;          // fbar_inv^2 * sigma_eta
  double sigma2_prime = 0.0;    // sigma_eta * E[(eps + mean X_i^2)^-2]
  double sigma2_prime_se = 0.0;
  double sigma2 = 0.0;          // sigma2_prime - sigma1
  double sigma_hat = 0.0;       // sigma1 / B + sigma2 / (K B)
  double g_matrix = 0.0;        // -2 / (1 - gamma) * fbar_inv
  double sigma_inf = 0.0;       // -sigma_hat / (2 g_matrix)
  int B = 0;
  int K = 0;
  double gamma = 0.0;
  double epsilon = 0.0;
  std::uint64_t mc_reps = 0;
  std::uint64_t seed = 0;
};

inline constexpr std::uint64_t kMinMonteCarloReps = 100'000;
inline constexpr std::uint64_t kDefaultMonteCarloReps = 10'000'000;

/// Monte Carlo moments of 1/(eps + mean X_i^2) on the dedicated oracle stream
/// derived from `seed`. No lower bound on `reps`.
kernels::InverseFisherSums inverse_fisher_moments(int B, double epsilon, std::uint64_t reps,
                                                  std::uint64_t seed);

/// Fills every AsymptoticTheory field. Requires mc_reps >= kMinMonteCarloReps.
AsymptoticTheory theoretical_sigma(double gamma, int B, int K, double epsilon,
                                   std::uint64_t mc_reps, std::uint64_t seed);

/// Sigma_hat with reuse size K replaced; used for the K = 1 comparison.
double sigma_hat_for(const AsymptoticTheory& theory, int K);

void write_theory_json(const AsymptoticTheory& theory, const std::filesystem::path& path);

/// E_n = (theta_n - theta_bar) / sqrt(alpha_n)
double normalized_error(double theta_n, double theta_bar, double alpha_n);

/// High-probability bound on the reuse gradient error:
///   L      = log(pi^2 n^2 (d + 1) / (3 delta))
///   beta_n = sqrt(C^2 / (K^3 B (B - 1)) * L) + sum(trace_vars) / (K^2 B)
///   bound  = sqrt(2 beta_n L) + 2 C L / K
/// trace_vars holds trace(sample covariance) of each of the K batches.
double theorem3_bound(double C, int K, int B, long long n, double delta,
                      const std::vector<double>& trace_vars, int d);

struct Theorem3Check {
  int replications = 0;
  int covered = 0;           // replications with lhs <= bound
  double frequency = 0.0;
  double C = 0.0;            // max of |G|, |eta|, omega over every replication
  double mean_lhs = 0.0;
  double mean_bound = 0.0;
};

/// Empirical coverage of theorem3_bound at frozen theta = 0 (so every ratio
/// is 1): each replication draws K batches of B i.i.d. gradient samples and
/// compares |grad(0) - mean G| against the bound.
Theorem3Check theorem3_coverage(double gamma, int K, int B, long long n, double delta,
                                int replications, std::uint64_t seed);

}  // namespace rnpg::lqc
