#pragma once

#include <Eigen/Core>

#include <functional>
#include <string>

namespace rnpg {

/// alpha_n = alpha (constant) or alpha / n^p (polynomial), n >= 1.
struct StepSchedule {
  enum class Kind { constant, polynomial };
  Kind kind = Kind::constant;
  double alpha = 0.01;
  double power = 1.0;

  static StepSchedule constant(double alpha) { return {Kind::constant, alpha, 0.0}; }
  static StepSchedule polynomial(double alpha, double power) {
    return {Kind::polynomial, alpha, power};
  }

  /// Throws unless alpha > 0 and, for polynomial, power in (0.5, 1].
  void validate() const;
  double at(long long n) const;
};

std::string to_string(StepSchedule::Kind kind);
StepSchedule::Kind schedule_kind_from_string(const std::string& name);

/// Componentwise box [-R, R]^d.
struct ProjectionBox {
  double radius = 1e6;
  Eigen::VectorXd project(const Eigen::VectorXd& theta) const;
};

/// clip(theta + alpha_n * direction, -R, R). Throws on a non-finite direction.
Eigen::VectorXd update_step(const Eigen::VectorXd& theta, const Eigen::VectorXd& direction,
                            const StepSchedule& schedule, long long n, const ProjectionBox& box);

/// Bias-corrected Adam moments.
struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long long step = 0;

  explicit AdamState(Eigen::Index dim = 0)
      : m(Eigen::VectorXd::Zero(dim)), v(Eigen::VectorXd::Zero(dim)) {}
};

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Advances `state` by one step with `direction` as the gradient and returns
/// m_hat / (sqrt(v_hat) + eps).
Eigen::VectorXd adam_precondition(const Eigen::VectorXd& direction, AdamState& state,
                                  const AdamOptions& opts = {});

struct TrpoResult {
  Eigen::VectorXd theta;
  bool accepted = false;
  int backtracks = 0;
  double step_scale = 0.0;   // beta * 0.5^backtracks
  double quadratic_kl = 0.0; // 0.5 * step^T F step of the returned step
};

/// Evaluates the surrogate objective at candidate parameters.
using SurrogateFn = std::function<double(const Eigen::VectorXd& theta)>;

/// KL-constrained natural step. x = F^{-1} g, full step beta*x with
/// beta = sqrt(2 delta / x^T F x), halved up to `max_backtracks` times until
/// the surrogate does not decrease and 0.5 s^T F s <= delta. Returns theta
/// unchanged when no candidate is accepted or g == 0.
TrpoResult trpo_step(const Eigen::VectorXd& theta, const Eigen::VectorXd& grad,
                     const Eigen::MatrixXd& fim, double delta, const SurrogateFn& surrogate,
                     int max_backtracks = 10);

}  // namespace rnpg
