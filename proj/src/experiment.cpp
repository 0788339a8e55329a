#include "rnpg/experiment.hpp"

#include "rnpg/advantage.hpp"
#include "rnpg/env.hpp"
#include "rnpg/estimators.hpp"
#include "rnpg/optim.hpp"
#include "rnpg/policy.hpp"

#include <nlohmann/json.hpp>
#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

namespace rnpg {

namespace {

using Clock = std::chrono::steady_clock;

long long elapsed_ms(Clock::time_point since) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - since).count();
}

PolicyKind policy_for(const std::string& env) {
  return env == "lqc" ? PolicyKind::gaussian_shift : PolicyKind::softmax_mlp;
}

AdvantageFn exact_advantage_for(const std::string& env) {
  if (env != "lqc") return {};
  return [](const Eigen::VectorXd& theta, const State& s, Action a) {
    return lqc_advantage(theta[0], s[0], a);
  };
}

struct Collected {
  std::vector<Sample> samples;
  double units = 0.0;
  double mean_reward = 0.0;
};

Collected collect(const ExperimentConfig& cfg, const Environment& env, const Policy& policy,
                  const Eigen::VectorXd& theta, const AdvantageFn& exact, Rng& rng) {
  Collected c;
  if (cfg.sampling == SamplingMode::single_path) {
    const auto episodes = rollout_episodes(env, policy, theta, cfg.B, rng);
    double total = 0.0;
    for (const auto& ep : episodes) total += ep.undiscounted_return();
    c.mean_reward = total / static_cast<double>(episodes.size());
    c.samples = advantage_reward_to_go(episodes, cfg.gamma);
    c.units = static_cast<double>(episodes.size());
  } else {
    c.samples = sample_occupancy_iid(env, policy, theta, cfg.B, rng, exact);
    double total = 0.0;
    for (const auto& s : c.samples) total += s.reward;
    c.mean_reward = total / static_cast<double>(c.samples.size());
    c.units = static_cast<double>(c.samples.size());
  }
  return c;
}

/// Importance-weighted surrogate of eta over the reused batches, up to a constant.
double surrogate_value(const std::vector<const Batch*>& batches, const Policy& policy,
                       const Eigen::VectorXd& theta_now, const Eigen::VectorXd& theta,
                       const EstimatorOptions& opts) {
  double total = 0.0;
  double units = 0.0;
  for (const Batch* b : batches) {
    units += b->units;
    for (const auto& s : b->samples) {
      const double r = likelihood_ratio_hat(policy, theta, s, opts.omega_max);
      const double adv = opts.advantage ? opts.advantage(theta_now, s.state, s.action) : s.advantage;
      total += r * s.discount_weight * adv;
    }
  }
  const double scale = batches.front()->mode == SamplingMode::iid ? 1.0 / (1.0 - opts.gamma) : 1.0;
  return scale * total / units;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------

RepResult run_replication(const ExperimentConfig& cfg, int rep) {
  const auto start = Clock::now();
  RepResult out;
  out.rep = rep;

  const auto env = make_env(cfg.env, cfg.gamma);
  const PolicyKind kind = policy_for(cfg.env);
  const auto policy = make_policy(kind, env->spec());
  const AdvantageFn exact = exact_advantage_for(cfg.env);

  const Rng root(cfg.base_seed + static_cast<std::uint64_t>(rep));
  Rng init_rng = root.split(0);
  Rng rng = root.split(1);

  Eigen::VectorXd theta = kind == PolicyKind::gaussian_shift
                              ? Eigen::VectorXd::Constant(1, cfg.theta0)
                              : policy->initial_params(init_rng);

  EstimatorOptions opts;
  opts.gamma = cfg.gamma;
  opts.epsilon = cfg.epsilon;
  opts.omega_max = cfg.omega_max;
  opts.advantage = exact;

  ReplayWindow window(std::max(cfg.K_grad, cfg.K_fim));
  AdamState adam(theta.size());
  const ProjectionBox box{cfg.box_radius};

  for (int n = 1; n <= cfg.iterations; ++n) {
    RunRecord rec;
    rec.rep = rep;
    rec.iteration = n;
    try {
      Batch batch;
      batch.behavior = {kind, theta};
      batch.iteration = n;
      batch.mode = cfg.sampling;
      auto collected = collect(cfg, *env, *policy, theta, exact, rng);
      batch.samples = std::move(collected.samples);
      batch.units = collected.units;
      rec.mean_reward = collected.mean_reward;
      if (cfg.split_fim_samples) {
        batch.fim_samples = collect(cfg, *env, *policy, theta, exact, rng).samples;
      }
      window.push(std::move(batch));

      Eigen::VectorXd direction;
      Eigen::VectorXd grad;
      switch (cfg.algo) {
        case Algo::vpg:
          grad = grad_estimate_vanilla(window.newest(), *policy, theta, opts);
          direction = grad;
          break;
        case Algo::rpg: {
          auto g = grad_estimate_reuse(window, *policy, theta, cfg.K_grad, opts);
          grad = std::move(g.grad);
          rec.ratio_max = g.ratios.max;
          direction = grad;
          break;
        }
        case Algo::vnpg: {
          grad = grad_estimate_vanilla(window.newest(), *policy, theta, opts);
          const Eigen::MatrixXd fim = fim_estimate_vanilla(window.newest(), *policy, theta, opts);
          direction = natural_direction(grad, fim).direction;
          break;
        }
        case Algo::rnpg: {
          auto report = natural_gradient_reuse(window, *policy, theta, cfg.K_grad, cfg.K_fim, opts);
          grad = std::move(report.grad_hat);
          rec.ratio_max = report.ratio_stats.max;
          direction = std::move(report.nat_dir);
          break;
        }
        case Algo::trpo_reuse: {
          auto g = grad_estimate_reuse(window, *policy, theta, cfg.K_grad, opts);
          grad = std::move(g.grad);
          rec.ratio_max = g.ratios.max;
          const Eigen::MatrixXd fim = fim_estimate_reuse(window, *policy, theta, cfg.K_fim, opts);
          const auto batches = window.recent(cfg.K_grad);
          const Eigen::VectorXd theta_now = theta;
          auto surrogate = [&](const Eigen::VectorXd& candidate) {
            return surrogate_value(batches, *policy, theta_now, candidate, opts);
          };
          theta = box.project(trpo_step(theta, grad, fim, cfg.trpo_delta, surrogate).theta);
          break;
        }
      }

      if (cfg.algo != Algo::trpo_reuse) {
        if (cfg.adam) direction = adam_precondition(direction, adam);
        theta = update_step(theta, direction, cfg.schedule, n, box);
      }
      if (!theta.allFinite()) throw std::domain_error("non-finite parameters");
      rec.grad_norm = grad.norm();
      rec.theta_norm = theta.norm();
    } catch (const std::exception& e) {
      out.failed = true;
      out.error = "iteration " + std::to_string(n) + ": " + e.what();
      rec.mean_reward = std::numeric_limits<double>::quiet_NaN();
      rec.theta_norm = std::numeric_limits<double>::quiet_NaN();
      rec.grad_norm = std::numeric_limits<double>::quiet_NaN();
      rec.ratio_max = std::numeric_limits<double>::quiet_NaN();
      rec.wall_ms = elapsed_ms(start);
      out.records.push_back(rec);
      break;
    }
    if (n % cfg.record_every == 0 || n == cfg.iterations) {
      rec.wall_ms = elapsed_ms(start);
      out.records.push_back(rec);
    }
  }
  out.final_theta = theta;
  out.final_alpha = cfg.schedule.at(cfg.iterations);
  out.wall_ms = elapsed_ms(start);
  return out;
}

int ExperimentResult::failed_reps() const {
  int failed = 0;
  for (const auto& r : reps) failed += r.failed ? 1 : 0;
  return failed;
}

double ExperimentResult::final_mean_reward() const {
  double total = 0.0;
  int count = 0;
  for (const auto& r : reps) {
    if (r.failed || r.records.empty()) continue;
    total += r.records.back().mean_reward;
    ++count;
  }
  return count > 0 ? total / count : std::numeric_limits<double>::quiet_NaN();
}

double ExperimentResult::mean_std_error(int first_iteration, int last_iteration) const {
  std::map<int, std::vector<double>> by_iteration;
  for (const auto& r : reps) {
    if (r.failed) continue;
    for (const auto& rec : r.records) {
      if (rec.iteration >= first_iteration && rec.iteration <= last_iteration) {
        by_iteration[rec.iteration].push_back(rec.mean_reward);
      }
    }
  }
  double total = 0.0;
  int count = 0;
  for (const auto& [it, values] : by_iteration) {
    if (values.size() < 2) continue;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double n = static_cast<double>(values.size());
    total += std::sqrt(ss / (n - 1.0) / n);
    ++count;
  }
  return count > 0 ? total / count : std::numeric_limits<double>::quiet_NaN();
}

void write_metrics_csv(const ExperimentResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  out << kMetricsHeader << '\n';
  for (const auto& r : result.reps) {
    for (const auto& rec : r.records) {
      out << rec.rep << ',' << rec.iteration << ',' << format_double(rec.mean_reward) << ','
          << format_double(rec.theta_norm) << ',' << format_double(rec.grad_norm) << ','
          << format_double(rec.ratio_max) << ',' << rec.wall_ms << '\n';
    }
  }
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::optional<std::filesystem::path>& out_dir) {
  config.validate();
  const auto start = Clock::now();
  ExperimentResult result;
  result.config = config;
  result.reps.resize(static_cast<std::size_t>(config.macro_reps));

  const int threads = config.jobs > 0 ? config.jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (int r = 0; r < config.macro_reps; ++r) {
    result.reps[static_cast<std::size_t>(r)] = run_replication(config, r);
  }
  result.wall_ms = elapsed_ms(start);

  if (out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(*out_dir / "final_params");
    {
      std::ofstream cfg_out(*out_dir / "config.json");
      cfg_out << to_json(config).dump(2) << '\n';
    }
    write_metrics_csv(result, *out_dir / "metrics.csv");

    const auto env = make_env(config.env, config.gamma);
    const auto policy = make_policy(policy_for(config.env), env->spec());
    nlohmann::json summary;
    summary["macro_reps"] = config.macro_reps;
    summary["failed_reps"] = result.failed_reps();
    auto& failures = summary["failures"] = nlohmann::json::array();
    for (const auto& r : result.reps) {
      char name[32];
      std::snprintf(name, sizeof name, "rep_%04d", r.rep);
      save_params({policy_for(config.env), r.final_theta}, *policy, *out_dir / "final_params" / name);
      if (r.failed) failures.push_back({{"rep", r.rep}, {"error", r.error}});
    }
    std::ofstream sum_out(*out_dir / "run_summary.json");
    sum_out << summary.dump(2) << '\n';
  }
  return result;
}

// ---------------------------------------------------------------------------

SweepResult sweep_reuse(const ExperimentConfig& config, const std::vector<int>& k_list,
                        const std::vector<int>& k_fim_list,
                        const std::optional<std::filesystem::path>& out_dir) {
  if (k_list.empty() || k_fim_list.empty()) throw ConfigError("sweep: K lists must be non-empty");
  SweepResult sweep;
  for (int k : k_list) {
    long long previous_ms = -1;
    int previous_k_fim = 0;
    for (int k_fim : k_fim_list) {
      ExperimentConfig cfg = config;
      cfg.K_grad = k;
      cfg.K_fim = k_fim;
      std::optional<std::filesystem::path> dir;
      if (out_dir) dir = *out_dir / ("K" + std::to_string(k) + "_Kf" + std::to_string(k_fim));
      const auto result = run_experiment(cfg, dir);

      SweepRow row;
      row.K_grad = k;
      row.K_fim = k_fim;
      row.final_mean_reward = result.final_mean_reward();
      row.mean_std_error = result.mean_std_error(1, cfg.iterations);
      row.wall_ms = result.wall_ms;
      sweep.rows.push_back(row);

      if (previous_ms >= 0 && k_fim > previous_k_fim && row.wall_ms < previous_ms) {
        sweep.warnings.push_back("wall time decreased from K_fim=" + std::to_string(previous_k_fim) +
                                 " to K_fim=" + std::to_string(k_fim) + " at K_grad=" +
                                 std::to_string(k));
      }
      previous_ms = row.wall_ms;
      previous_k_fim = k_fim;
    }
  }

  if (out_dir) {
    std::ofstream out(*out_dir / "summary.csv");
    out << "K_grad,K_fim,final_mean_reward,mean_std_error,wall_ms\n";
    for (const auto& r : sweep.rows) {
      out << r.K_grad << ',' << r.K_fim << ',' << format_double(r.final_mean_reward) << ','
          << format_double(r.mean_std_error) << ',' << r.wall_ms << '\n';
    }
  }
  return sweep;
}

// ---------------------------------------------------------------------------

VerifyResult lqc_verify(const ExperimentConfig& config,
                        const std::optional<std::filesystem::path>& out_dir) {
  if (config.env != "lqc") throw ConfigError("lqc-verify requires env=lqc");
  if (config.strict && config.macro_reps < stats::kMinQQReplications) {
    throw ConfigError("insufficient replications: need at least " +
                      std::to_string(stats::kMinQQReplications));
  }
  const auto run = run_experiment(config, out_dir);

  VerifyResult v;
  for (const auto& r : run.reps) {
    if (!r.failed) v.errors.push_back(lqc::normalized_error(r.final_theta[0], 0.0, r.final_alpha));
  }
  v.theory = lqc::theoretical_sigma(config.gamma, config.B, config.K_grad, config.epsilon,
                                    config.mc_reps, config.base_seed);

  nlohmann::json verdict;
  verdict["B"] = config.B;
  verdict["K_grad"] = config.K_grad;
  verdict["K_fim"] = config.K_fim;
  verdict["n_reps"] = v.errors.size();
  verdict["failed_reps"] = run.failed_reps();
  verdict["sigma_inf"] = v.theory.sigma_inf;
  verdict["thresholds"] = {{"min_correlation", stats::kQQMinCorrelation},
                           {"var_ratio_low", stats::kVarRatioLow},
                           {"var_ratio_high", stats::kVarRatioHigh},
                           {"min_reps", stats::kMinQQReplications}};
  if (config.K_fim != 1 || !config.split_fim_samples) {
    verdict["note"] = "theory assumes K_fim = 1 and a separate FIM batch";
  }

  if (static_cast<int>(v.errors.size()) < stats::kMinQQReplications) {
    v.status = "insufficient replications";
    v.pass = false;
    verdict["correlation"] = nullptr;
    verdict["var_ratio"] = nullptr;
  } else {
    v.qq = stats::qq_report(v.errors, v.theory.sigma_inf);
    v.pass = v.qq->passes();
    v.status = v.pass ? "pass" : "fail";
    verdict["correlation"] = v.qq->correlation_defined ? nlohmann::json(v.qq->correlation)
                                                       : nlohmann::json(nullptr);
    verdict["var_ratio"] = v.qq->var_ratio;
  }
  verdict["status"] = v.status;
  verdict["pass"] = v.pass;

  if (out_dir) {
    lqc::write_theory_json(v.theory, *out_dir / "theory.json");
    stats::write_density_csv(stats::density_histogram(v.errors, v.theory.sigma_inf),
                             *out_dir / "density.csv");
    if (v.qq) stats::write_qq_csv(*v.qq, *out_dir / "qq.csv");
    std::ofstream out(*out_dir / "verdict.json");
    out << verdict.dump(2) << '\n';
  }
  return v;
}

}  // namespace rnpg
