#pragma once

// Data-parallel inner loops of the estimators and the Monte Carlo oracle.
//
// Each kernel has an OpenMP version (used by the library) and a plain serial
// reference (kept for tests and the benchmark). The OpenMP versions split work
// into chunks whose boundaries depend only on the problem size, and reduce the
// chunk partials in chunk order, so results do not depend on the thread count.

#include "rnpg/rng.hpp"

#include <Eigen/Core>

#include <cstdint>

namespace rnpg::kernels {

/// Columns per chunk in the sample-parallel reductions.
inline constexpr Eigen::Index kSampleChunk = 256;
/// Number of independent rng substreams in the Monte Carlo reductions.
inline constexpr int kMonteCarloChunks = 64;

/// Sums of y = 1/(eps + mean(X_i^2)), X_i ~ N(0,1) i.i.d., over `reps` draws.
struct InverseFisherSums {
  std::uint64_t reps = 0;
  double sum_y = 0.0;
  double sum_y2 = 0.0;
  double sum_y4 = 0.0;

  InverseFisherSums& operator+=(const InverseFisherSums& other);
};

namespace serial {

/// sum_i coeffs[i] * scores.col(i)
Eigen::VectorXd weighted_sum(const Eigen::MatrixXd& scores, const Eigen::VectorXd& coeffs);
/// sum_i weights[i] * scores.col(i) * scores.col(i)^T, weights >= 0
Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& scores, const Eigen::VectorXd& weights);
InverseFisherSums inverse_fisher_sums(int batch, double epsilon, std::uint64_t reps,
                                      const Rng& base);

}  // namespace serial

namespace parallel {

Eigen::VectorXd weighted_sum(const Eigen::MatrixXd& scores, const Eigen::VectorXd& coeffs);
Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& scores, const Eigen::VectorXd& weights);
InverseFisherSums inverse_fisher_sums(int batch, double epsilon, std::uint64_t reps,
                                      const Rng& base);

}  // namespace parallel

}  // namespace rnpg::kernels
