#pragma once

#include "rnpg/config.hpp"
#include "rnpg/lqc_oracle.hpp"
#include "rnpg/stats.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rnpg {

/// One metrics row. mean_reward is the mean undiscounted episode return of
/// the iteration's batch (single path) or the mean immediate reward of its
/// samples (i.i.d.).
struct RunRecord {
  int rep = 0;
  int iteration = 0;
  double mean_reward = 0.0;
  double theta_norm = 0.0;
  double grad_norm = 0.0;
  double ratio_max = 1.0;
  long long wall_ms = 0;
};

inline constexpr const char* kMetricsHeader =
    "rep,iteration,mean_reward,theta_norm,grad_norm,ratio_max,wall_ms";

struct RepResult {
  int rep = 0;
  bool failed = false;
  std::string error;
  Eigen::VectorXd final_theta;
  double final_alpha = 0.0;  // step size of the last update
  std::vector<RunRecord> records;
  long long wall_ms = 0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<RepResult> reps;
  long long wall_ms = 0;

  int failed_reps() const;
  /// Mean over successful reps of the last recorded mean_reward.
  double final_mean_reward() const;
  /// Standard error of mean_reward across successful reps, averaged over
  /// recorded iterations in [first, last].
  double mean_std_error(int first_iteration, int last_iteration) const;
};

/// Runs replication `rep` (seed base_seed + rep) in the calling thread.
/// Never throws for numerical failures; those mark the result as failed.
RepResult run_replication(const ExperimentConfig& config, int rep);

/// Runs every macro-replication (in parallel across reps, `jobs` threads) and,
/// when out_dir is given, writes config.json, metrics.csv, run_summary.json
/// and final_params/rep_NNNN.{bin,json}.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::optional<std::filesystem::path>& out_dir = {});

void write_metrics_csv(const ExperimentResult& result, const std::filesystem::path& path);

struct SweepRow {
  int K_grad = 0;
  int K_fim = 0;
  double final_mean_reward = 0.0;
  double mean_std_error = 0.0;
  long long wall_ms = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<std::string> warnings;
};

/// One run per (K_grad, K_fim) combination under out_dir/K<k>_Kf<kf>, plus
/// summary.csv. Wall time that drops as K_fim grows is reported as a warning.
SweepResult sweep_reuse(const ExperimentConfig& config, const std::vector<int>& k_list,
                        const std::vector<int>& k_fim_list,
                        const std::optional<std::filesystem::path>& out_dir = {});

struct VerifyResult {
  lqc::AsymptoticTheory theory;
  std::vector<double> errors;  // E_n of each successful rep
  std::optional<stats::QQReport> qq;
  bool pass = false;
  std::string status;
};

/// Trains the LQC task, forms E_n = theta_N / sqrt(alpha_N) for each rep and
/// compares the spread with the theoretical Sigma_inf. Writes theory.json,
/// density.csv, qq.csv and verdict.json when out_dir is given.
VerifyResult lqc_verify(const ExperimentConfig& config,
                        const std::optional<std::filesystem::path>& out_dir = {});

}  // namespace rnpg
