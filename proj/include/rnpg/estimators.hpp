#pragma once

#include "rnpg/env.hpp"
#include "rnpg/policy.hpp"
#include "rnpg/types.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <deque>
#include <iosfwd>
#include <optional>
#include <vector>

namespace rnpg {

enum class SamplingMode { iid, single_path };

std::string to_string(SamplingMode mode);
SamplingMode sampling_mode_from_string(const std::string& name);

/// Samples collected at one iteration under one behavior policy.
struct Batch {
  std::vector<Sample> samples;
  /// Separate draws for the FIM estimate. Empty means the FIM uses `samples`.
  std::vector<Sample> fim_samples;
  PolicyParams behavior;
  int iteration = 0;
  SamplingMode mode = SamplingMode::iid;
  /// Gradient normalizer: number of episodes (single path) or samples (i.i.d.).
  double units = 0.0;

  const std::vector<Sample>& fim_source() const {
    return fim_samples.empty() ? samples : fim_samples;
  }
};

/// FIFO of the most recent batches, oldest first.
class ReplayWindow {
 public:
  explicit ReplayWindow(int capacity);

  /// Appends a batch, evicting the oldest when full. Iterations must increase
  /// strictly and batches must be non-empty.
  void push(Batch batch);

  int capacity() const { return capacity_; }
  int size() const { return static_cast<int>(batches_.size()); }
  bool empty() const { return batches_.empty(); }
  const std::deque<Batch>& batches() const { return batches_; }
  const Batch& newest() const { return batches_.back(); }

  /// The min(k, size) most recent batches, oldest first.
  std::vector<const Batch*> recent(int k) const;

 private:
  int capacity_;
  std::deque<Batch> batches_;
};

/// Checkpoint format: magic "RNPGWIN1", u64 header length, JSON header, then
/// each batch's behavior theta and packed samples as little-endian float64.
void write_window(const ReplayWindow& window, std::ostream& out);
ReplayWindow read_window(std::istream& in);

struct EstimatorOptions {
  double gamma = 0.99;
  double epsilon = 1e-3;
  /// Upper clip for the importance ratio; disabled when empty.
  std::optional<double> omega_max;
  /// When set, advantages are recomputed at the current parameters from this
  /// closed form; otherwise the advantage stored at collection time is used.
  AdvantageFn advantage;
};

struct RatioStats {
  double min = 1.0;
  double max = 1.0;
  double mean = 1.0;
  std::size_t count = 0;
};

/// Per-pair policy ratio pi_{theta_now}(a|s) / pi_{theta_m}(a|s), computed as
/// exp(logp_now - behavior_logp) and clipped to [0, omega_max] when requested.
/// Throws std::overflow_error when the exponent exceeds 700.
double likelihood_ratio_hat(const Policy& policy, const Eigen::VectorXd& theta_now,
                            const Sample& sample, std::optional<double> omega_max = {});

struct GradEstimate {
  Eigen::VectorXd grad;
  RatioStats ratios;
};

/// Importance-weighted gradient over the min(k_grad, size) most recent batches:
///   i.i.d.:       1/(1-gamma) * sum w * A * score / sum units
///   single path:  sum w * gamma^t * A * score / sum episodes
GradEstimate grad_estimate_reuse(const ReplayWindow& window, const Policy& policy,
                                 const Eigen::VectorXd& theta_now, int k_grad,
                                 const EstimatorOptions& opts);

/// eps*I + importance-weighted mean of score outer products over the
/// min(k_fim, size) most recent batches (weighted by discount_weight).
Eigen::MatrixXd fim_estimate_reuse(const ReplayWindow& window, const Policy& policy,
                                   const Eigen::VectorXd& theta_now, int k_fim,
                                   const EstimatorOptions& opts);

/// Plain on-policy estimators on one batch, no importance ratio.
Eigen::VectorXd grad_estimate_vanilla(const Batch& batch, const Policy& policy,
                                      const Eigen::VectorXd& theta, const EstimatorOptions& opts);
Eigen::MatrixXd fim_estimate_vanilla(const Batch& batch, const Policy& policy,
                                     const Eigen::VectorXd& theta, const EstimatorOptions& opts);

struct NaturalDirection {
  Eigen::VectorXd direction;
  double residual = 0.0;  // ||F x - g||
};

/// Solves fim * x = grad by Cholesky. Throws std::runtime_error if the
/// factorization fails.
NaturalDirection natural_direction(const Eigen::VectorXd& grad, const Eigen::MatrixXd& fim);

struct NaturalGradReport {
  Eigen::VectorXd grad_hat;
  Eigen::MatrixXd fim_hat;
  Eigen::VectorXd nat_dir;
  RatioStats ratio_stats;
  double solver_residual = 0.0;
};

NaturalGradReport natural_gradient_reuse(const ReplayWindow& window, const Policy& policy,
                                         const Eigen::VectorXd& theta_now, int k_grad, int k_fim,
                                         const EstimatorOptions& opts);

}  // namespace rnpg
