#include "rnpg/optim.hpp"

#include "rnpg/estimators.hpp"

#include <cmath>
#include <stdexcept>

namespace rnpg {

void StepSchedule::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("step size must be > 0");
  if (kind == Kind::polynomial && !(power > 0.5 && power <= 1.0)) {
    throw std::invalid_argument("polynomial step power must lie in (0.5, 1]");
  }
}

double StepSchedule::at(long long n) const {
  if (n < 1) throw std::invalid_argument("step index starts at 1");
  if (kind == Kind::constant) return alpha;
  return alpha / std::pow(static_cast<double>(n), power);
}

std::string to_string(StepSchedule::Kind kind) {
  return kind == StepSchedule::Kind::constant ? "constant" : "polynomial";
}

StepSchedule::Kind schedule_kind_from_string(const std::string& name) {
  if (name == "constant") return StepSchedule::Kind::constant;
  if (name == "polynomial") return StepSchedule::Kind::polynomial;
  throw std::invalid_argument("unknown schedule kind: " + name);
}

Eigen::VectorXd ProjectionBox::project(const Eigen::VectorXd& theta) const {
  return theta.cwiseMax(-radius).cwiseMin(radius);
}

Eigen::VectorXd update_step(const Eigen::VectorXd& theta, const Eigen::VectorXd& direction,
                            const StepSchedule& schedule, long long n, const ProjectionBox& box) {
  if (!direction.allFinite()) throw std::domain_error("update_step: non-finite direction");
  return box.project(theta + schedule.at(n) * direction);
}

Eigen::VectorXd adam_precondition(const Eigen::VectorXd& direction, AdamState& state,
                                  const AdamOptions& opts) {
  if (state.m.size() != direction.size()) {
    state = AdamState(direction.size());
  }
  ++state.step;
  state.m = opts.beta1 * state.m + (1.0 - opts.beta1) * direction;
  state.v = opts.beta2 * state.v + (1.0 - opts.beta2) * direction.cwiseAbs2();
  const double c1 = 1.0 - std::pow(opts.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(opts.beta2, static_cast<double>(state.step));
  return ((state.m.array() / c1) / ((state.v.array() / c2).sqrt() + opts.eps)).matrix();
}

TrpoResult trpo_step(const Eigen::VectorXd& theta, const Eigen::VectorXd& grad,
                     const Eigen::MatrixXd& fim, double delta, const SurrogateFn& surrogate,
                     int max_backtracks) {
  if (!(delta > 0.0)) throw std::invalid_argument("trpo_step: delta must be > 0");
  TrpoResult result;
  result.theta = theta;
  if (grad.isZero(0.0)) return result;

  const Eigen::VectorXd x = natural_direction(grad, fim).direction;
  const double curvature = x.dot(fim * x);
  if (!(curvature > 0.0)) throw std::runtime_error("trpo_step: x^T F x <= 0, FIM not positive definite");

  const double beta = std::sqrt(2.0 * delta / curvature);
  const double base = surrogate ? surrogate(theta) : 0.0;
  double scale = beta;
  for (int k = 0; k < max_backtracks; ++k, scale *= 0.5) {
    const Eigen::VectorXd step = scale * x;
    const double kl = 0.5 * step.dot(fim * step);
    if (kl > delta + 1e-12) continue;
    const Eigen::VectorXd candidate = theta + step;
    if (surrogate && surrogate(candidate) - base < 0.0) continue;
    result.theta = candidate;
    result.accepted = true;
    result.backtracks = k;
    result.step_scale = scale;
    result.quadratic_kl = kl;
    return result;
  }
  return result;
}

}  // namespace rnpg
