#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace rnpg {

/// Seeded random stream used everywhere randomness enters a run.
///
/// The engine is std::mt19937_64. Substreams are derived by mixing the parent
/// seed with a stream id through SplitMix64, so a run seeded with `s` owns the
/// same numbers on every build of the same version regardless of thread count.
class Rng {
 public:
  static constexpr std::string_view kName = "mt19937_64+splitmix64";
  static constexpr int kVersion = 1;

  explicit Rng(std::uint64_t seed);

  /// Independent stream keyed by (seed, stream). Does not advance *this.
  [[nodiscard]] Rng split(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }

  double normal();
  double uniform();                       // [0, 1)
  double uniform(double low, double high);
  /// Number of failures before the first success, P(T=t) = (1-p)^t p.
  std::uint64_t geometric(double success_prob);
  bool bernoulli(double p);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace rnpg
