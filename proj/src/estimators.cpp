#include "rnpg/estimators.hpp"

#include "rnpg/kernels.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace rnpg {

std::string to_string(SamplingMode mode) {
  return mode == SamplingMode::iid ? "iid" : "single_path";
}

SamplingMode sampling_mode_from_string(const std::string& name) {
  if (name == "iid") return SamplingMode::iid;
  if (name == "single_path") return SamplingMode::single_path;
  throw std::invalid_argument("unknown sampling mode: " + name);
}

// ---------------------------------------------------------------------------
// ReplayWindow

ReplayWindow::ReplayWindow(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw std::invalid_argument("ReplayWindow: capacity must be >= 1");
}

void ReplayWindow::push(Batch batch) {
  if (batch.samples.empty()) throw std::invalid_argument("ReplayWindow: empty batch");
  if (!batches_.empty() && batch.iteration <= batches_.back().iteration) {
    throw std::invalid_argument("ReplayWindow: iterations must increase strictly");
  }
  if (batch.units <= 0.0) batch.units = static_cast<double>(batch.samples.size());
  batches_.push_back(std::move(batch));
  while (static_cast<int>(batches_.size()) > capacity_) batches_.pop_front();
}

std::vector<const Batch*> ReplayWindow::recent(int k) const {
  const int take = std::min(std::max(k, 0), size());
  std::vector<const Batch*> out;
  out.reserve(static_cast<std::size_t>(take));
  for (int i = size() - take; i < size(); ++i) out.push_back(&batches_[static_cast<std::size_t>(i)]);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kMaxLogRatio = 700.0;

struct Scored {
  Eigen::MatrixXd scores;     // d x N, one column per sample
  Eigen::VectorXd ratio;      // N
  Eigen::VectorXd discount;   // N
  Eigen::VectorXd advantage;  // N
  double units = 0.0;
  SamplingMode mode = SamplingMode::iid;
  RatioStats stats;
};

/// Evaluates scores at theta for every sample of `batches` (batch-major,
/// sample-major order). Ratios are left at exactly 1 when use_ratio is false.
Scored score_batches(const std::vector<const Batch*>& batches, bool fim_source, bool use_ratio,
                     const Policy& policy, const Eigen::VectorXd& theta,
                     const EstimatorOptions& opts) {
  if (batches.empty()) throw std::invalid_argument("estimator: replay window is empty");
  std::vector<const Sample*> flat;
  Scored out;
  out.mode = batches.front()->mode;
  for (const Batch* b : batches) {
    const auto& src = fim_source ? b->fim_source() : b->samples;
    for (const auto& s : src) flat.push_back(&s);
    out.units += b->units;
  }
  const auto n = static_cast<Eigen::Index>(flat.size());
  const int d = policy.dim();
  out.scores.resize(d, n);
  out.ratio = Eigen::VectorXd::Ones(n);
  out.discount.resize(n);
  out.advantage.resize(n);
  Eigen::VectorXd logp_now(n);

#pragma omp parallel for schedule(static) if (n > 256)
  for (Eigen::Index i = 0; i < n; ++i) {
    const Sample& s = *flat[static_cast<std::size_t>(i)];
    logp_now[i] = policy.logp_and_score(theta, s.state, s.action, out.scores.col(i));
    out.discount[i] = s.discount_weight;
    out.advantage[i] = opts.advantage ? opts.advantage(theta, s.state, s.action) : s.advantage;
  }

  if (use_ratio) {
    double sum = 0.0;
    out.stats.min = std::numeric_limits<double>::infinity();
    out.stats.max = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double log_ratio = logp_now[i] - flat[static_cast<std::size_t>(i)]->behavior_logp;
      if (!(log_ratio <= kMaxLogRatio)) {
        throw std::overflow_error("likelihood ratio exponent " + std::to_string(log_ratio) +
                                  " exceeds " + std::to_string(kMaxLogRatio) + " at sample " +
                                  std::to_string(i));
      }
      double r = std::exp(log_ratio);
      if (opts.omega_max) r = std::min(r, *opts.omega_max);
      out.ratio[i] = r;
      out.stats.min = std::min(out.stats.min, r);
      out.stats.max = std::max(out.stats.max, r);
      sum += r;
    }
    out.stats.mean = n > 0 ? sum / static_cast<double>(n) : 1.0;
  }
  out.stats.count = static_cast<std::size_t>(n);
  return out;
}

Eigen::VectorXd gradient_from(const Scored& sc, double gamma) {
  const Eigen::VectorXd coeffs =
      (sc.ratio.array() * sc.discount.array() * sc.advantage.array()).matrix();
  const double scale = sc.mode == SamplingMode::iid ? 1.0 / (1.0 - gamma) : 1.0;
  return kernels::parallel::weighted_sum(sc.scores, coeffs) * (scale / sc.units);
}

Eigen::MatrixXd fim_from(const Scored& sc, double epsilon) {
  const Eigen::VectorXd weights = (sc.ratio.array() * sc.discount.array()).matrix();
  const double total = sc.discount.sum();
  Eigen::MatrixXd fim = kernels::parallel::weighted_gram(sc.scores, weights);
  if (total > 0.0) fim /= total;
  fim.diagonal().array() += epsilon;
  return fim;
}

void check_k(int k) {
  if (k < 1) throw std::invalid_argument("estimator: reuse size must be >= 1");
}

}  // namespace

double likelihood_ratio_hat(const Policy& policy, const Eigen::VectorXd& theta_now,
                            const Sample& sample, std::optional<double> omega_max) {
  const double log_ratio = policy.logp(theta_now, sample.state, sample.action) - sample.behavior_logp;
  if (!(log_ratio <= kMaxLogRatio)) {
    throw std::overflow_error("likelihood ratio exponent " + std::to_string(log_ratio) +
                              " exceeds " + std::to_string(kMaxLogRatio));
  }
  const double r = std::exp(log_ratio);
  return omega_max ? std::min(r, *omega_max) : r;
}

GradEstimate grad_estimate_reuse(const ReplayWindow& window, const Policy& policy,
                                 const Eigen::VectorXd& theta_now, int k_grad,
                                 const EstimatorOptions& opts) {
  check_k(k_grad);
  const Scored sc = score_batches(window.recent(k_grad), false, true, policy, theta_now, opts);
  return {gradient_from(sc, opts.gamma), sc.stats};
}

Eigen::MatrixXd fim_estimate_reuse(const ReplayWindow& window, const Policy& policy,
                                   const Eigen::VectorXd& theta_now, int k_fim,
                                   const EstimatorOptions& opts) {
  check_k(k_fim);
  const Scored sc = score_batches(window.recent(k_fim), true, true, policy, theta_now, opts);
  return fim_from(sc, opts.epsilon);
}

Eigen::VectorXd grad_estimate_vanilla(const Batch& batch, const Policy& policy,
                                      const Eigen::VectorXd& theta, const EstimatorOptions& opts) {
  const Scored sc = score_batches({&batch}, false, false, policy, theta, opts);
  return gradient_from(sc, opts.gamma);
}

Eigen::MatrixXd fim_estimate_vanilla(const Batch& batch, const Policy& policy,
                                     const Eigen::VectorXd& theta, const EstimatorOptions& opts) {
  const Scored sc = score_batches({&batch}, true, false, policy, theta, opts);
  return fim_from(sc, opts.epsilon);
}

NaturalDirection natural_direction(const Eigen::VectorXd& grad, const Eigen::MatrixXd& fim) {
  if (fim.rows() != fim.cols() || fim.rows() != grad.size()) {
    throw std::invalid_argument("natural_direction: dimension mismatch");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(fim);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("natural_direction: FIM estimate is not positive definite");
  }
  NaturalDirection out;
  out.direction = llt.solve(grad);
  out.residual = (fim * out.direction - grad).norm();
  return out;
}

NaturalGradReport natural_gradient_reuse(const ReplayWindow& window, const Policy& policy,
                                         const Eigen::VectorXd& theta_now, int k_grad, int k_fim,
                                         const EstimatorOptions& opts) {
  NaturalGradReport report;
  auto g = grad_estimate_reuse(window, policy, theta_now, k_grad, opts);
  report.grad_hat = std::move(g.grad);
  report.ratio_stats = g.ratios;
  report.fim_hat = fim_estimate_reuse(window, policy, theta_now, k_fim, opts);
  auto nd = natural_direction(report.grad_hat, report.fim_hat);
  report.nat_dir = std::move(nd.direction);
  report.solver_residual = nd.residual;
  return report;
}

}  // namespace rnpg
