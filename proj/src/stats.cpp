#include "rnpg/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <stdexcept>

namespace rnpg::stats {

MeanCov sample_mean_cov(const std::vector<Eigen::VectorXd>& vectors) {
  if (vectors.size() < 2) throw std::invalid_argument("sample_mean_cov: need at least 2 vectors");
  const Eigen::Index d = vectors.front().size();
  MeanCov out{Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d)};
  double n = 0.0;
  for (const auto& v : vectors) {
    if (v.size() != d) throw std::invalid_argument("sample_mean_cov: dimension mismatch");
    n += 1.0;
    const Eigen::VectorXd delta = v - out.mean;
    out.mean += delta / n;
    out.cov += delta * (v - out.mean).transpose();
  }
  out.cov /= (n - 1.0);
  return out;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p must lie in (0, 1)");

  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // Halley refinement.
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

QQReport qq_report(std::span<const double> errors, double sigma_inf) {
  if (errors.size() < static_cast<std::size_t>(kMinQQReplications)) {
    throw std::invalid_argument("insufficient replications");
  }
  if (!(sigma_inf > 0.0)) throw std::invalid_argument("qq_report: sigma_inf must be > 0");

  const auto n = errors.size();
  QQReport r;
  r.n_reps = static_cast<int>(n);
  r.empirical_quantiles.assign(errors.begin(), errors.end());
  std::sort(r.empirical_quantiles.begin(), r.empirical_quantiles.end());
  const double sd = std::sqrt(sigma_inf);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    r.probabilities.push_back(p);
    r.theoretical_quantiles.push_back(sd * normal_quantile(p));
  }

  double me = 0.0, mt = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    me += r.empirical_quantiles[i];
    mt += r.theoretical_quantiles[i];
  }
  me /= static_cast<double>(n);
  mt /= static_cast<double>(n);
  double see = 0.0, stt = 0.0, set = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double de = r.empirical_quantiles[i] - me;
    const double dt = r.theoretical_quantiles[i] - mt;
    see += de * de;
    stt += dt * dt;
    set += de * dt;
  }
  if (r.empirical_quantiles.front() == r.empirical_quantiles.back()) {
    r.correlation_defined = false;
    r.correlation = 0.0;
  } else {
    r.correlation = std::clamp(set / std::sqrt(see * stt), -1.0, 1.0);
  }
  r.var_ratio = see / static_cast<double>(n - 1) / sigma_inf;
  return r;
}

std::vector<DensityBin> density_histogram(std::span<const double> errors, double sigma_inf,
                                          int bins) {
  if (bins < 1) throw std::invalid_argument("density_histogram: bins must be >= 1");
  if (!(sigma_inf > 0.0)) throw std::invalid_argument("density_histogram: sigma_inf must be > 0");
  const double sd = std::sqrt(sigma_inf);
  const double lo = -4.0 * sd;
  const double width = 8.0 * sd / bins;
  std::vector<DensityBin> out(static_cast<std::size_t>(bins));
  for (int k = 0; k < bins; ++k) {
    auto& b = out[static_cast<std::size_t>(k)];
    b.center = lo + (k + 0.5) * width;
    b.theoretical = std::exp(-0.5 * b.center * b.center / sigma_inf) /
                    std::sqrt(2.0 * std::numbers::pi * sigma_inf);
  }
  for (double e : errors) {
    const auto k = static_cast<long>(std::floor((e - lo) / width));
    if (k >= 0 && k < bins) out[static_cast<std::size_t>(k)].empirical += 1.0;
  }
  const double norm = errors.empty() ? 1.0 : static_cast<double>(errors.size()) * width;
  for (auto& b : out) b.empirical /= norm;
  return out;
}

void write_qq_csv(const QQReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  out << "p,empirical_q,theoretical_q\n" << std::setprecision(17);
  for (std::size_t i = 0; i < report.probabilities.size(); ++i) {
    out << report.probabilities[i] << ',' << report.empirical_quantiles[i] << ','
        << report.theoretical_quantiles[i] << '\n';
  }
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void write_density_csv(const std::vector<DensityBin>& bins, const std::filesystem::path& path) {
  std::ofstream out(path);
  out << "bin_center,empirical_density,theoretical_density\n" << std::setprecision(17);
  for (const auto& b : bins) out << b.center << ',' << b.empirical << ',' << b.theoretical << '\n';
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace rnpg::stats
