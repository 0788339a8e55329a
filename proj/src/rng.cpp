#include "rnpg/rng.hpp"

#include <stdexcept>

namespace rnpg {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

Rng Rng::split(std::uint64_t stream) const {
  return Rng(splitmix64(seed_ ^ splitmix64(stream + 0x5851f42d4c957f2dULL)));
}

double Rng::normal() { return normal_(engine_); }

double Rng::uniform() { return uniform_(engine_); }

double Rng::uniform(double low, double high) {
  return low + (high - low) * uniform_(engine_);
}

std::uint64_t Rng::geometric(double success_prob) {
  if (!(success_prob > 0.0 && success_prob <= 1.0)) {
    throw std::invalid_argument("geometric: success probability must lie in (0, 1]");
  }
  if (success_prob == 1.0) return 0;
  std::geometric_distribution<std::uint64_t> dist(success_prob);
  return dist(engine_);
}

bool Rng::bernoulli(double p) { return uniform_(engine_) < p; }

}  // namespace rnpg
