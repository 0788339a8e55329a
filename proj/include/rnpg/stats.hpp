#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <span>
#include <vector>

namespace rnpg::stats {

struct MeanCov {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;  // unbiased, divisor n - 1
};

/// Single-pass (Welford) mean and covariance. Throws for fewer than 2 vectors.
MeanCov sample_mean_cov(const std::vector<Eigen::VectorXd>& vectors);

double normal_cdf(double x);

/// Inverse standard normal CDF. Acklam's rational approximation refined by
/// one Halley step on erfc; absolute error well below 1e-8 on (0, 1).
double normal_quantile(double p);

inline constexpr int kMinQQReplications = 100;
// Acceptance thresholds for 500 replications, taken from simulating the null
// (errors exactly N(0, sigma_inf)).
inline constexpr double kQQMinCorrelation = 0.99;
inline constexpr double kVarRatioLow = 0.8;
inline constexpr double kVarRatioHigh = 1.2;

struct QQReport {
  std::vector<double> probabilities;  // (i - 0.5) / n
  std::vector<double> empirical_quantiles;
  std::vector<double> theoretical_quantiles;
  double correlation = 0.0;
  bool correlation_defined = true;  // false when all errors coincide
  double var_ratio = 0.0;           // sample variance / sigma_inf
  int n_reps = 0;

  bool passes() const {
    return correlation_defined && correlation >= kQQMinCorrelation && var_ratio >= kVarRatioLow &&
           var_ratio <= kVarRatioHigh;
  }
};

/// Compares sorted errors against sqrt(sigma_inf) * Phi^{-1}((i - 0.5)/n).
/// Throws std::invalid_argument("insufficient replications") below 100 errors.
QQReport qq_report(std::span<const double> errors, double sigma_inf);

struct DensityBin {
  double center = 0.0;
  double empirical = 0.0;
  double theoretical = 0.0;
};

/// 40-bin histogram over [-4 sqrt(sigma_inf), 4 sqrt(sigma_inf)], normalized
/// by the total count, next to the N(0, sigma_inf) density at bin centres.
std::vector<DensityBin> density_histogram(std::span<const double> errors, double sigma_inf,
                                          int bins = 40);

void write_qq_csv(const QQReport& report, const std::filesystem::path& path);
void write_density_csv(const std::vector<DensityBin>& bins, const std::filesystem::path& path);

}  // namespace rnpg::stats
