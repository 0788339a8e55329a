#pragma once

#include "rnpg/types.hpp"

#include <vector>

namespace rnpg {

/// Turns complete episodes into samples with
///   A(s_t, a_t) = sum_l gamma^l r_{t+l} - b,
/// where b is the mean reward-to-go over every timestep in the batch.
/// discount_weight is set to gamma^t. Throws on an empty batch.
std::vector<Sample> advantage_reward_to_go(const std::vector<Episode>& episodes, double gamma);

/// Closed-form LQC advantage under gaussian_shift: 1 + theta^2 - (s + a)^2.
inline double lqc_advantage(double theta, double state, double action) {
  const double x = state + action;
  return 1.0 + theta * theta - x * x;
}

}  // namespace rnpg
