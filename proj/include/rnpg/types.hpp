#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace rnpg {

/// Environment state. Capacity is fixed at 4 (cartpole) so states never allocate.
using State = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 4, 1>;

/// Actions are carried as a double. Discrete actions hold their index (0, 1, ...).
using Action = double;

enum class ActionKind { discrete, continuous };

struct ActionSpace {
  ActionKind kind = ActionKind::discrete;
  int count = 0;       // discrete only
  double low = 0.0;    // continuous only
  double high = 0.0;

  static ActionSpace discrete(int n) { return {ActionKind::discrete, n, 0.0, 0.0}; }
  static ActionSpace continuous(double low, double high) {
    return {ActionKind::continuous, 0, low, high};
  }
  bool contains(Action a) const;
};

struct EnvSpec {
  std::string name;
  int state_dim = 0;
  ActionSpace action;
  double gamma = 0.99;
  int episode_cap = 200;

  /// Throws std::invalid_argument unless gamma in (0,1) and episode_cap >= 1.
  void validate() const;
};

struct Transition {
  State state;
  Action action = 0.0;
  double reward = 0.0;
  State next_state;
  bool terminal = false;
  int timestep = 0;
};

/// One state-action pair plus everything the estimators need to reuse it later.
struct Sample {
  State state;
  Action action = 0.0;
  double behavior_logp = 0.0;   // log pi_{theta_m}(a|s) at collection time
  double advantage = 0.0;
  double discount_weight = 1.0; // gamma^t in single-path mode, 1 in i.i.d. mode
  double reward = 0.0;          // immediate reward, kept for reporting
};

struct Episode {
  std::vector<Transition> steps;
  std::vector<double> logps;  // behavior log-density of each step's action

  double undiscounted_return() const;
};

}  // namespace rnpg
