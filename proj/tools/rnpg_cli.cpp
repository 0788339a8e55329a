// rnpg: command-line front end.
//   rnpg run        --config=cfg.json --out=dir [--key=value ...]
//   rnpg sweep      --K-list=1,5,10 --K-fim-list=1,5 --out=dir [--key=value ...]
//   rnpg lqc-verify --out=dir [--key=value ...]
//   rnpg theory     --gamma=0.5 --B=5 --K=5 --epsilon=0.01 --out=theory.json
// Exit codes: 0 ok, 1 configuration error, 2 every replication failed.

#include "rnpg/config.hpp"
#include "rnpg/experiment.hpp"
#include "rnpg/lqc_oracle.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <map>
#include <optional>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct Common {
  std::string config_path;
  std::string out_dir;
  std::map<std::string, std::string> overrides;
};

void add_common(CLI::App* sub, Common& common) {
  sub->add_option("--config", common.config_path, "JSON config file");
  sub->add_option("--out", common.out_dir, "output directory");
  nlohmann::json keys = rnpg::to_json(rnpg::default_config("cartpole", rnpg::Algo::rnpg));
  keys.erase("rng");
  for (const auto& [key, value] : keys.items()) {
    const std::string name = key;
    sub->add_option_function<std::string>(
        "--" + name, [&common, name](const std::string& v) { common.overrides[name] = v; },
        "config field " + name);
  }
}

rnpg::ExperimentConfig resolve(const Common& common) {
  std::optional<std::filesystem::path> path;
  if (!common.config_path.empty()) path = common.config_path;
  return rnpg::load_config(path, common.overrides);
}

std::optional<std::filesystem::path> out_path(const Common& common) {
  if (common.out_dir.empty()) return std::nullopt;
  return std::filesystem::path(common.out_dir);
}

int report_run(const rnpg::ExperimentResult& result) {
  const int failed = result.failed_reps();
  for (const auto& r : result.reps) {
    if (r.failed) std::cerr << "rep " << r.rep << " failed: " << r.error << '\n';
  }
  std::cout << "reps: " << result.reps.size() << ", failed: " << failed
            << ", final mean reward: " << result.final_mean_reward()
            << ", wall: " << result.wall_ms << " ms\n";
  return failed == static_cast<int>(result.reps.size()) ? kExitRuntime : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Natural policy gradient with sample reuse"};
  app.require_subcommand(1);

  Common run_opts;
  auto* run = app.add_subcommand("run", "train one configuration over all macro-replications");
  add_common(run, run_opts);

  Common sweep_opts;
  std::vector<int> k_list;
  std::vector<int> k_fim_list;
  auto* sweep = app.add_subcommand("sweep", "grid over K_grad x K_fim");
  add_common(sweep, sweep_opts);
  sweep->add_option("--K-list", k_list, "K_grad values")->delimiter(',')->required();
  sweep->add_option("--K-fim-list", k_fim_list, "K_fim values")->delimiter(',')->required();

  Common verify_opts;
  auto* verify = app.add_subcommand("lqc-verify", "asymptotic normality check on the LQC task");
  add_common(verify, verify_opts);

  double th_gamma = 0.5;
  int th_B = 5;
  int th_K = 5;
  double th_eps = 0.01;
  std::uint64_t th_reps = rnpg::lqc::kDefaultMonteCarloReps;
  std::uint64_t th_seed = 1;
  std::string th_out = "theory.json";
  auto* theory = app.add_subcommand("theory", "closed-form LQC limiting variance");
  theory->add_option("--gamma", th_gamma);
  theory->add_option("--B", th_B);
  theory->add_option("--K", th_K);
  theory->add_option("--epsilon", th_eps);
  theory->add_option("--mc_reps", th_reps);
  theory->add_option("--seed", th_seed);
  theory->add_option("--out", th_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) {
      const auto cfg = resolve(run_opts);
      return report_run(rnpg::run_experiment(cfg, out_path(run_opts)));
    }
    if (*sweep) {
      const auto cfg = resolve(sweep_opts);
      const auto result = rnpg::sweep_reuse(cfg, k_list, k_fim_list, out_path(sweep_opts));
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
      bool any_ok = false;
      for (const auto& row : result.rows) {
        std::cout << "K_grad=" << row.K_grad << " K_fim=" << row.K_fim
                  << " reward=" << row.final_mean_reward << " se=" << row.mean_std_error
                  << " wall_ms=" << row.wall_ms << '\n';
        any_ok = any_ok || !std::isnan(row.final_mean_reward);
      }
      return any_ok ? kExitOk : kExitRuntime;
    }
    if (*verify) {
      if (!verify_opts.overrides.count("env")) verify_opts.overrides["env"] = "lqc";
      const auto cfg = resolve(verify_opts);
      const auto v = rnpg::lqc_verify(cfg, out_path(verify_opts));
      std::cout << "status: " << v.status;
      if (v.qq) std::cout << ", correlation: " << v.qq->correlation << ", var_ratio: " << v.qq->var_ratio;
      std::cout << ", sigma_inf: " << v.theory.sigma_inf << '\n';
      return v.errors.empty() ? kExitRuntime : kExitOk;
    }
    if (*theory) {
      const auto t = rnpg::lqc::theoretical_sigma(th_gamma, th_B, th_K, th_eps, th_reps, th_seed);
      rnpg::lqc::write_theory_json(t, th_out);
      std::cout << "sigma_inf: " << t.sigma_inf << '\n';
      return kExitOk;
    }
  } catch (const rnpg::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}
