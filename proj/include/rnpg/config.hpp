#pragma once

#include "rnpg/estimators.hpp"
#include "rnpg/optim.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace rnpg {

enum class Algo { vpg, rpg, vnpg, rnpg, trpo_reuse };

std::string to_string(Algo algo);
Algo algo_from_string(const std::string& name);

/// Raised for anything wrong with a configuration; the CLI maps it to exit code 1.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  std::string env = "cartpole";
  Algo algo = Algo::rnpg;
  int B = 4;
  int K_grad = 10;
  int K_fim = 1;
  double gamma = 0.99;
  double epsilon = 1e-3;
  StepSchedule schedule = StepSchedule::constant(0.01);
  bool adam = true;
  int iterations = 150;
  int macro_reps = 50;
  std::uint64_t base_seed = 1;
  std::optional<double> omega_max;
  double box_radius = 1e6;
  SamplingMode sampling = SamplingMode::single_path;

  double theta0 = 2.0;           // initial LQC parameter
  double trpo_delta = 0.01;      // KL radius for trpo_reuse
  int record_every = 1;          // metrics row stride (the last iteration is always recorded)
  int jobs = 0;                  // threads across macro-reps, 0 = OpenMP default
  bool split_fim_samples = false;// draw a separate batch for the FIM estimate
  std::uint64_t mc_reps = 10'000'000;  // oracle Monte Carlo size for lqc-verify
  bool strict = false;           // lqc-verify: error out below the replication minimum

  /// Throws ConfigError when any field or cross-field invariant is violated.
  void validate() const;
};

/// Defaults for an (env, algo) pair: cartpole follows the benchmark settings
/// (gamma 0.99, B 4, eps 1e-3, alpha 0.01, Adam, single path), lqc the
/// normality study (gamma 0.5, B 5, eps 0.01, alpha_n = 1/n^0.9, theta0 2,
/// i.i.d. sampling with a separate FIM batch). Vanilla algorithms get K = 1.
ExperimentConfig default_config(const std::string& env, Algo algo);

nlohmann::json to_json(const ExperimentConfig& config);

/// Resolves a config from an optional flat JSON object and string overrides
/// (key -> value, as given on the command line). env and algo are read first
/// to pick defaults; every other key then overrides them. Unknown keys and
/// unparsable values raise ConfigError.
ExperimentConfig resolve_config(const nlohmann::json& file,
                                const std::map<std::string, std::string>& overrides);

ExperimentConfig load_config(const std::optional<std::filesystem::path>& path,
                             const std::map<std::string, std::string>& overrides);

}  // namespace rnpg
