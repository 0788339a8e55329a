#include "rnpg/config.hpp"

#include <cmath>
#include <fstream>

namespace rnpg {

std::string to_string(Algo algo) {
  switch (algo) {
    case Algo::vpg: return "vpg";
    case Algo::rpg: return "rpg";
    case Algo::vnpg: return "vnpg";
    case Algo::rnpg: return "rnpg";
    case Algo::trpo_reuse: return "trpo_reuse";
  }
  return "unknown";
}

Algo algo_from_string(const std::string& name) {
  if (name == "vpg") return Algo::vpg;
  if (name == "rpg") return Algo::rpg;
  if (name == "vnpg") return Algo::vnpg;
  if (name == "rnpg") return Algo::rnpg;
  if (name == "trpo_reuse") return Algo::trpo_reuse;
  throw ConfigError("unknown algo: " + name);
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (env != "cartpole" && env != "lqc") fail("env must be cartpole or lqc");
  if (B < 1) fail("B must be >= 1");
  if (K_grad < 1 || K_fim < 1) fail("reuse sizes must be >= 1");
  if (!(gamma > 0.0 && gamma < 1.0)) fail("gamma must lie in (0, 1)");
  if (!(epsilon > 0.0)) fail("epsilon must be > 0");
  try {
    schedule.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  if (iterations < 1) fail("iterations must be >= 1");
  if (macro_reps < 1) fail("macro_reps must be >= 1");
  if (omega_max && !(*omega_max > 0.0)) fail("omega_max must be > 0");
  if (!(box_radius > 0.0) || !std::isfinite(box_radius)) fail("box_radius must be finite and > 0");
  if (!(trpo_delta > 0.0)) fail("trpo_delta must be > 0");
  if (record_every < 1) fail("record_every must be >= 1");
  if (jobs < 0) fail("jobs must be >= 0");
  if (algo == Algo::vnpg && (K_grad != 1 || K_fim != 1)) fail("vnpg requires K_grad = K_fim = 1");
  if (algo == Algo::vpg && K_grad != 1) fail("vpg requires K_grad = 1");
  if ((algo == Algo::vpg || algo == Algo::rpg) && K_fim != 1) {
    fail("vpg/rpg bypass the FIM; K_fim must be 1");
  }
  if (env == "lqc" && B < 1) fail("B must be >= 1");
}

ExperimentConfig default_config(const std::string& env, Algo algo) {
  ExperimentConfig c;
  c.env = env;
  c.algo = algo;
  const bool vanilla = algo == Algo::vpg || algo == Algo::vnpg;
  if (env == "lqc") {
    c.B = 5;
    c.K_grad = vanilla ? 1 : 5;
    c.gamma = 0.5;
    c.epsilon = 0.01;
    c.schedule = StepSchedule::polynomial(1.0, 0.9);
    c.adam = false;
    c.iterations = 50'000;
    c.macro_reps = 500;
    c.sampling = SamplingMode::iid;
    c.split_fim_samples = true;
    c.record_every = 1000;
  } else if (env == "cartpole") {
    c.K_grad = vanilla ? 1 : 10;
  } else {
    throw ConfigError("unknown env: " + env);
  }
  c.K_fim = 1;
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["env"] = c.env;
  j["algo"] = to_string(c.algo);
  j["B"] = c.B;
  j["K_grad"] = c.K_grad;
  j["K_fim"] = c.K_fim;
  j["gamma"] = c.gamma;
  j["epsilon"] = c.epsilon;
  j["schedule"] = to_string(c.schedule.kind);
  j["alpha"] = c.schedule.alpha;
  j["power"] = c.schedule.power;
  j["adam"] = c.adam;
  j["iterations"] = c.iterations;
  j["macro_reps"] = c.macro_reps;
  j["base_seed"] = c.base_seed;
  j["omega_max"] = c.omega_max ? nlohmann::json(*c.omega_max) : nlohmann::json(nullptr);
  j["box_radius"] = c.box_radius;
  j["sampling"] = to_string(c.sampling);
  j["theta0"] = c.theta0;
  j["trpo_delta"] = c.trpo_delta;
  j["record_every"] = c.record_every;
  j["jobs"] = c.jobs;
  j["split_fim_samples"] = c.split_fim_samples;
  j["mc_reps"] = c.mc_reps;
  j["strict"] = c.strict;
  j["rng"] = {{"name", std::string(Rng::kName)}, {"version", Rng::kVersion}};
  return j;
}

namespace {

nlohmann::json parse_value(const std::string& key, const std::string& text,
                           const nlohmann::json& like) {
  try {
    if (key == "omega_max") {
      if (text == "null" || text == "none" || text.empty()) return nullptr;
      return std::stod(text);
    }
    if (like.is_boolean()) {
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      throw ConfigError("expected true/false");
    }
    if (like.is_number_unsigned()) return std::stoull(text);
    if (like.is_number_integer()) {
      std::size_t used = 0;
      const double v = std::stod(text, &used);
      if (used != text.size() || v != std::floor(v)) throw ConfigError("expected an integer");
      return static_cast<long long>(v);
    }
    if (like.is_number()) {
      std::size_t used = 0;
      const double v = std::stod(text, &used);
      if (used != text.size()) throw ConfigError("trailing characters");
      return v;
    }
    return text;
  } catch (const std::exception& e) {
    throw ConfigError("bad value for " + key + ": '" + text + "' (" + e.what() + ")");
  }
}

ExperimentConfig from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    c.env = j.at("env").get<std::string>();
    c.algo = algo_from_string(j.at("algo").get<std::string>());
    c.B = j.at("B").get<int>();
    c.K_grad = j.at("K_grad").get<int>();
    c.K_fim = j.at("K_fim").get<int>();
    c.gamma = j.at("gamma").get<double>();
    c.epsilon = j.at("epsilon").get<double>();
    c.schedule.kind = schedule_kind_from_string(j.at("schedule").get<std::string>());
    c.schedule.alpha = j.at("alpha").get<double>();
    c.schedule.power = j.at("power").get<double>();
    c.adam = j.at("adam").get<bool>();
    c.iterations = j.at("iterations").get<int>();
    c.macro_reps = j.at("macro_reps").get<int>();
    c.base_seed = j.at("base_seed").get<std::uint64_t>();
    if (!j.at("omega_max").is_null()) c.omega_max = j.at("omega_max").get<double>();
    c.box_radius = j.at("box_radius").get<double>();
    c.sampling = sampling_mode_from_string(j.at("sampling").get<std::string>());
    c.theta0 = j.at("theta0").get<double>();
    c.trpo_delta = j.at("trpo_delta").get<double>();
    c.record_every = j.at("record_every").get<int>();
    c.jobs = j.at("jobs").get<int>();
    c.split_fim_samples = j.at("split_fim_samples").get<bool>();
    c.mc_reps = j.at("mc_reps").get<std::uint64_t>();
    c.strict = j.at("strict").get<bool>();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  return c;
}

}  // namespace

ExperimentConfig resolve_config(const nlohmann::json& file,
                                const std::map<std::string, std::string>& overrides) {
  if (!file.is_null() && !file.is_object()) throw ConfigError("config file must hold a JSON object");
  auto pick = [&](const std::string& key, const std::string& fallback) {
    if (auto it = overrides.find(key); it != overrides.end()) return it->second;
    if (file.is_object() && file.contains(key)) return file.at(key).get<std::string>();
    return fallback;
  };
  const std::string env = pick("env", "cartpole");
  const Algo algo = algo_from_string(pick("algo", "rnpg"));

  nlohmann::json j = to_json(default_config(env, algo));
  j.erase("rng");
  auto assign = [&](const std::string& key, nlohmann::json value) {
    if (!j.contains(key)) throw ConfigError("unknown configuration key: " + key);
    j[key] = std::move(value);
  };
  if (file.is_object()) {
    for (const auto& [key, value] : file.items()) {
      if (key == "rng") continue;
      assign(key, value);
    }
  }
  for (const auto& [key, text] : overrides) {
    if (!j.contains(key)) throw ConfigError("unknown configuration key: " + key);
    assign(key, parse_value(key, text, j.at(key)));
  }
  ExperimentConfig c = from_json(j);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::optional<std::filesystem::path>& path,
                             const std::map<std::string, std::string>& overrides) {
  nlohmann::json file;
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot open config file " + path->string());
    try {
      file = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
    }
  }
  return resolve_config(file, overrides);
}

}  // namespace rnpg
