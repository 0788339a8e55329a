#pragma once

#include "rnpg/policy.hpp"
#include "rnpg/rng.hpp"
#include "rnpg/types.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace rnpg {

/// Discounted MDP. Implementations are pure: step() depends only on its
/// arguments, reset() only on the supplied rng.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual const EnvSpec& spec() const = 0;
  /// Draws s0 ~ rho0.
  virtual State reset(Rng& rng) const = 0;
  virtual Transition step(const State& s, Action a, int timestep) const = 0;
};

// Classic cartpole constants (Barto, Sutton & Anderson; as in the common gym task).
struct CartpoleConstants {
  static constexpr double gravity = 9.8;
  static constexpr double cart_mass = 1.0;
  static constexpr double pole_mass = 0.1;
  static constexpr double half_length = 0.5;
  static constexpr double force = 10.0;
  static constexpr double dt = 0.02;
  static constexpr double x_limit = 2.4;
  static constexpr double angle_limit = 12.0 * 3.14159265358979323846 / 180.0;
  static constexpr int episode_cap = 200;
};

/// One explicit-Euler step of the cartpole. State is (x, x_dot, phi, phi_dot);
/// action 1 pushes right, 0 pushes left. Reward is 1 for every step. Terminal
/// iff |x| > 2.4, |phi| > 12 degrees, or timestep + 1 >= 200.
Transition cartpole_step(const State& s, Action a, int timestep);

/// Deterministic RL encoding of the scalar LQC problem: next = s + a,
/// reward = -(s + a)^2, never terminal.
Transition lqc_step(const State& s, Action a, int timestep);

class Cartpole final : public Environment {
 public:
  explicit Cartpole(double gamma = 0.99);
  const EnvSpec& spec() const override { return spec_; }
  /// rho0: uniform on [-0.05, 0.05]^4.
  State reset(Rng& rng) const override;
  Transition step(const State& s, Action a, int timestep) const override {
    return cartpole_step(s, a, timestep);
  }

 private:
  EnvSpec spec_;
};

class Lqc final : public Environment {
 public:
  /// episode_cap only truncates single-path rollouts; the i.i.d. sampler
  /// ignores it because the task itself never terminates.
  explicit Lqc(double gamma = 0.5, int episode_cap = 200);
  const EnvSpec& spec() const override { return spec_; }
  /// rho0: N(0, 1).
  State reset(Rng& rng) const override;
  Transition step(const State& s, Action a, int timestep) const override {
    return lqc_step(s, a, timestep);
  }

 private:
  EnvSpec spec_;
};

std::unique_ptr<Environment> make_env(const std::string& name, double gamma);

/// Exact advantage A^{pi_theta}(s, a), when the environment admits one.
using AdvantageFn = std::function<double(const Eigen::VectorXd& theta, const State& s, Action a)>;

/// Upper bound on the geometric horizon; reaching it means gamma is too close to 1.
inline constexpr std::uint64_t kGeometricSafetyCap = 1'000'000;

/// Draws `count` independent pairs from the discounted occupancy measure of
/// pi_theta: T ~ Geometric(1 - gamma) on {0, 1, ...}, roll a fresh trajectory
/// from rho0 for T steps and keep only (s_T, a_T).
///
/// Advantages come from `exact_advantage` when given. Otherwise the rollout is
/// continued from (s_T, a_T) to termination and the discounted return-to-go,
/// centred by its batch mean, is used. A rollout that terminates before
/// reaching T is discarded and redrawn.
std::vector<Sample> sample_occupancy_iid(const Environment& env, const Policy& policy,
                                         const Eigen::VectorXd& theta, int count, Rng& rng,
                                         const AdvantageFn& exact_advantage = {});

/// Draws only the geometric horizon used by sample_occupancy_iid.
std::uint64_t draw_geometric_horizon(double gamma, Rng& rng);

/// Rolls one full episode (until terminal or episode_cap steps).
Episode rollout_episode(const Environment& env, const Policy& policy,
                        const Eigen::VectorXd& theta, Rng& rng);

std::vector<Episode> rollout_episodes(const Environment& env, const Policy& policy,
                                      const Eigen::VectorXd& theta, int count, Rng& rng);

/// B full episodes, one Sample per timestep with discount_weight gamma^t and
/// reward-to-go advantages.
std::vector<Sample> sample_single_path(const Environment& env, const Policy& policy,
                                       const Eigen::VectorXd& theta, int count, Rng& rng);

}  // namespace rnpg
