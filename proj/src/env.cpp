#include "rnpg/env.hpp"

#include "rnpg/advantage.hpp"

#include <cmath>
#include <stdexcept>

namespace rnpg {

bool ActionSpace::contains(Action a) const {
  if (kind == ActionKind::discrete) {
    return a == std::floor(a) && a >= 0.0 && a < static_cast<double>(count);
  }
  return std::isfinite(a) && a >= low && a <= high;
}

void EnvSpec::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0, 1)");
  if (episode_cap < 1) throw std::invalid_argument("episode_cap must be >= 1");
  if (state_dim < 1 || state_dim > State::MaxRowsAtCompileTime) {
    throw std::invalid_argument("unsupported state dimension");
  }
}

double Episode::undiscounted_return() const {
  double total = 0.0;
  for (const auto& s : steps) total += s.reward;
  return total;
}

Transition cartpole_step(const State& s, Action a, int timestep) {
  using C = CartpoleConstants;
  if (s.size() != 4 || !s.allFinite()) throw std::invalid_argument("cartpole_step: bad state");
  if (a != 0.0 && a != 1.0) throw std::invalid_argument("cartpole_step: action must be 0 or 1");

  const double x = s[0], x_dot = s[1], phi = s[2], phi_dot = s[3];
  const double force = a == 1.0 ? C::force : -C::force;
  const double total_mass = C::cart_mass + C::pole_mass;
  const double pole_moment = C::pole_mass * C::half_length;
  const double cos_phi = std::cos(phi);
  const double sin_phi = std::sin(phi);

  const double temp = (force + pole_moment * phi_dot * phi_dot * sin_phi) / total_mass;
  const double phi_acc = (C::gravity * sin_phi - cos_phi * temp) /
                         (C::half_length * (4.0 / 3.0 - C::pole_mass * cos_phi * cos_phi / total_mass));
  const double x_acc = temp - pole_moment * phi_acc * cos_phi / total_mass;

  Transition tr;
  tr.state = s;
  tr.action = a;
  tr.reward = 1.0;
  tr.timestep = timestep;
  tr.next_state.resize(4);
  tr.next_state << x + C::dt * x_dot, x_dot + C::dt * x_acc, phi + C::dt * phi_dot,
      phi_dot + C::dt * phi_acc;
  tr.terminal = std::abs(tr.next_state[0]) > C::x_limit ||
                std::abs(tr.next_state[2]) > C::angle_limit || timestep + 1 >= C::episode_cap;
  return tr;
}

Transition lqc_step(const State& s, Action a, int timestep) {
  if (s.size() != 1 || !std::isfinite(s[0]) || !std::isfinite(a)) {
    throw std::invalid_argument("lqc_step: non-finite state or action");
  }
  const double x = s[0] + a;
  Transition tr;
  tr.state = s;
  tr.action = a;
  tr.reward = -x * x;
  tr.next_state.resize(1);
  tr.next_state[0] = x;
  tr.terminal = false;
  tr.timestep = timestep;
  return tr;
}

Cartpole::Cartpole(double gamma) {
  spec_.name = "cartpole";
  spec_.state_dim = 4;
  spec_.action = ActionSpace::discrete(2);
  spec_.gamma = gamma;
  spec_.episode_cap = CartpoleConstants::episode_cap;
  spec_.validate();
}

State Cartpole::reset(Rng& rng) const {
  State s(4);
  for (int i = 0; i < 4; ++i) s[i] = rng.uniform(-0.05, 0.05);
  return s;
}

Lqc::Lqc(double gamma, int episode_cap) {
  spec_.name = "lqc";
  spec_.state_dim = 1;
  spec_.action = ActionSpace::continuous(-HUGE_VAL, HUGE_VAL);
  spec_.gamma = gamma;
  spec_.episode_cap = episode_cap;
  spec_.validate();
}

State Lqc::reset(Rng& rng) const {
  State s(1);
  s[0] = rng.normal();
  return s;
}

std::unique_ptr<Environment> make_env(const std::string& name, double gamma) {
  if (name == "cartpole") return std::make_unique<Cartpole>(gamma);
  if (name == "lqc") return std::make_unique<Lqc>(gamma);
  throw std::invalid_argument("unknown environment: " + name);
}

std::uint64_t draw_geometric_horizon(double gamma, Rng& rng) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
  const std::uint64_t t = rng.geometric(1.0 - gamma);
  if (t >= kGeometricSafetyCap) {
    throw std::runtime_error("geometric horizon exceeded safety cap; gamma too close to 1");
  }
  return t;
}

namespace {

double discounted_continuation(const Environment& env, const Policy& policy,
                               const Eigen::VectorXd& theta, Transition tr, Rng& rng) {
  const double gamma = env.spec().gamma;
  double total = tr.reward;
  double weight = 1.0;
  while (!tr.terminal && tr.timestep + 1 < env.spec().episode_cap) {
    const Action a = policy.sample_action(theta, tr.next_state, rng);
    tr = env.step(tr.next_state, a, tr.timestep + 1);
    weight *= gamma;
    total += weight * tr.reward;
  }
  return total;
}

}  // namespace

std::vector<Sample> sample_occupancy_iid(const Environment& env, const Policy& policy,
                                         const Eigen::VectorXd& theta, int count, Rng& rng,
                                         const AdvantageFn& exact_advantage) {
  if (count < 1) throw std::invalid_argument("sample_occupancy_iid: count must be >= 1");
  const double gamma = env.spec().gamma;
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(count));

  while (static_cast<int>(out.size()) < count) {
    const std::uint64_t horizon = draw_geometric_horizon(gamma, rng);
    State s = env.reset(rng);
    bool dead = false;
    for (std::uint64_t t = 0; t < horizon; ++t) {
      const Action a = policy.sample_action(theta, s, rng);
      const Transition tr = env.step(s, a, static_cast<int>(std::min<std::uint64_t>(t, 1u << 30)));
      if (tr.terminal) {
        dead = true;
        break;
      }
      s = tr.next_state;
    }
    if (dead) continue;

    Sample sample;
    sample.action = policy.sample_action(theta, s, rng);
    sample.behavior_logp = policy.logp(theta, s, sample.action);
    sample.discount_weight = 1.0;
    const Transition last = env.step(s, sample.action, static_cast<int>(std::min<std::uint64_t>(horizon, 1u << 30)));
    sample.reward = last.reward;
    if (exact_advantage) {
      sample.advantage = exact_advantage(theta, s, sample.action);
    } else {
      sample.advantage = discounted_continuation(env, policy, theta, last, rng);
    }
    sample.state = std::move(s);
    out.push_back(std::move(sample));
  }

  if (!exact_advantage) {
    double mean = 0.0;
    for (const auto& s : out) mean += s.advantage;
    mean /= static_cast<double>(out.size());
    for (auto& s : out) s.advantage -= mean;
  }
  return out;
}

Episode rollout_episode(const Environment& env, const Policy& policy,
                        const Eigen::VectorXd& theta, Rng& rng) {
  const int cap = env.spec().episode_cap;
  Episode ep;
  State s = env.reset(rng);
  for (int t = 0; t < cap; ++t) {
    const Action a = policy.sample_action(theta, s, rng);
    ep.logps.push_back(policy.logp(theta, s, a));
    Transition tr = env.step(s, a, t);
    const bool stop = tr.terminal;
    s = tr.next_state;
    ep.steps.push_back(std::move(tr));
    if (stop) break;
  }
  return ep;
}

std::vector<Episode> rollout_episodes(const Environment& env, const Policy& policy,
                                      const Eigen::VectorXd& theta, int count, Rng& rng) {
  if (count < 1) throw std::invalid_argument("rollout_episodes: count must be >= 1");
  std::vector<Episode> episodes;
  episodes.reserve(static_cast<std::size_t>(count));
  for (int b = 0; b < count; ++b) episodes.push_back(rollout_episode(env, policy, theta, rng));
  return episodes;
}

std::vector<Sample> sample_single_path(const Environment& env, const Policy& policy,
                                       const Eigen::VectorXd& theta, int count, Rng& rng) {
  return advantage_reward_to_go(rollout_episodes(env, policy, theta, count, rng), env.spec().gamma);
}

}  // namespace rnpg
