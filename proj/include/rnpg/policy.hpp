#pragma once

#include "rnpg/rng.hpp"
#include "rnpg/types.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <memory>
#include <string>

namespace rnpg {

enum class PolicyKind { gaussian_shift, softmax_mlp };

std::string to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(const std::string& name);

struct PolicyParams {
  PolicyKind kind = PolicyKind::gaussian_shift;
  Eigen::VectorXd theta;
};

/// Stochastic policy pi_theta(a|s) with exact log-density and score.
///
/// Implementations are stateless; theta is always passed in, so one instance
/// can be shared across threads.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual PolicyKind kind() const = 0;
  virtual int dim() const = 0;

  virtual double logp(const Eigen::VectorXd& theta, const State& s, Action a) const = 0;

  /// Writes grad_theta log pi(a|s) into `score` and returns log pi(a|s).
  /// The returned value is bit-identical to logp() on the same arguments.
  virtual double logp_and_score(const Eigen::VectorXd& theta, const State& s, Action a,
                                Eigen::Ref<Eigen::VectorXd> score) const = 0;

  virtual Action sample_action(const Eigen::VectorXd& theta, const State& s, Rng& rng) const = 0;

  virtual Eigen::VectorXd initial_params(Rng& rng) const = 0;

  Eigen::VectorXd score(const Eigen::VectorXd& theta, const State& s, Action a) const;
};

/// pi_theta(a|s) = phi(a + s - theta) for scalar state and action, i.e.
/// a = (theta - s) + Z with Z ~ N(0,1). Score is (a + s - theta).
class GaussianShiftPolicy final : public Policy {
 public:
  PolicyKind kind() const override { return PolicyKind::gaussian_shift; }
  int dim() const override { return 1; }
  double logp(const Eigen::VectorXd& theta, const State& s, Action a) const override;
  double logp_and_score(const Eigen::VectorXd& theta, const State& s, Action a,
                        Eigen::Ref<Eigen::VectorXd> score) const override;
  Action sample_action(const Eigen::VectorXd& theta, const State& s, Rng& rng) const override;
  Eigen::VectorXd initial_params(Rng& rng) const override;
};

/// Two-layer perceptron with ReLU hidden units and a softmax over discrete
/// actions.
///
/// Parameter layout (layer-major, row-major inside each matrix):
///   W1 [hidden x inputs], b1 [hidden], W2 [actions x hidden], b2 [actions].
/// For cartpole (4 -> 32 -> 2) that is 128 + 32 + 64 + 2 = 226 parameters.
/// Weights are He-uniform initialized, biases start at zero. The ReLU
/// derivative at exactly zero is taken as zero.
class SoftmaxMlpPolicy final : public Policy {
 public:
  SoftmaxMlpPolicy(int inputs, int hidden, int actions);

  PolicyKind kind() const override { return PolicyKind::softmax_mlp; }
  int dim() const override;
  int inputs() const { return inputs_; }
  int hidden() const { return hidden_; }
  int actions() const { return actions_; }

  double logp(const Eigen::VectorXd& theta, const State& s, Action a) const override;
  double logp_and_score(const Eigen::VectorXd& theta, const State& s, Action a,
                        Eigen::Ref<Eigen::VectorXd> score) const override;
  Action sample_action(const Eigen::VectorXd& theta, const State& s, Rng& rng) const override;
  Eigen::VectorXd initial_params(Rng& rng) const override;

  /// Action probabilities at state s.
  Eigen::VectorXd probabilities(const Eigen::VectorXd& theta, const State& s) const;

 private:
  struct Forward {
    Eigen::VectorXd pre;     // hidden pre-activations
    Eigen::VectorXd hidden;  // ReLU outputs
    Eigen::VectorXd logits;
    double log_norm = 0.0;   // log sum exp(logits)
  };
  Forward forward(const Eigen::VectorXd& theta, const State& s) const;
  void check(const Eigen::VectorXd& theta, const State& s) const;

  int inputs_;
  int hidden_;
  int actions_;
};

/// Policy for an environment: gaussian_shift needs a scalar continuous
/// action, softmax_mlp a discrete one (hidden width 32).
std::unique_ptr<Policy> make_policy(PolicyKind kind, const EnvSpec& spec);

/// Writes `<stem>.bin` (little-endian float64, in parameter order) and
/// `<stem>.json` (kind, d, layer dims).
void save_params(const PolicyParams& params, const Policy& policy, const std::filesystem::path& stem);
PolicyParams load_params(const std::filesystem::path& stem);

}  // namespace rnpg
