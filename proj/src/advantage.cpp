#include "rnpg/advantage.hpp"

#include <stdexcept>

namespace rnpg {

std::vector<Sample> advantage_reward_to_go(const std::vector<Episode>& episodes, double gamma) {
  std::size_t total = 0;
  for (const auto& ep : episodes) total += ep.steps.size();
  if (total == 0) throw std::invalid_argument("advantage_reward_to_go: empty batch");

  std::vector<Sample> out;
  out.reserve(total);
  double sum_rtg = 0.0;
  for (const auto& ep : episodes) {
    const std::size_t len = ep.steps.size();
    std::vector<double> rtg(len);
    double running = 0.0;
    for (std::size_t t = len; t-- > 0;) {
      running = ep.steps[t].reward + gamma * running;
      rtg[t] = running;
    }
    double weight = 1.0;
    for (std::size_t t = 0; t < len; ++t) {
      const auto& tr = ep.steps[t];
      Sample s;
      s.state = tr.state;
      s.action = tr.action;
      s.behavior_logp = ep.logps.empty() ? 0.0 : ep.logps[t];
      s.advantage = rtg[t];
      s.discount_weight = weight;
      s.reward = tr.reward;
      out.push_back(std::move(s));
      sum_rtg += rtg[t];
      weight *= gamma;
    }
  }
  const double baseline = sum_rtg / static_cast<double>(total);
  for (auto& s : out) s.advantage -= baseline;
  return out;
}

}  // namespace rnpg
