#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ldpbo/algorithms.hpp"
#include "ldpbo/config.hpp"
#include "ldpbo/environments.hpp"

namespace ldpbo {

/// Constants resolved for one (algorithm, trial) pair.
struct TrialConstants {
  double B = 0.0;
  double R = 0.0;
  DerivedConstants derived;
};

struct TrialOutcome {
  std::string algo;
  std::size_t trial = 0;
  std::vector<RoundResult> trace;
  std::optional<std::string> error;  // set when the trial aborted
  TrialConstants constants;
  std::size_t clip_events = 0;
};

struct SummaryRow {
  std::size_t round = 0;
  std::string algo;
  double mean_cum_regret = 0.0;
  double std_cum_regret = 0.0;
};

/// Per-algorithm, per-round mean and sample std of cumulative regret over
/// the completed trials.
struct SummaryStats {
  std::vector<SummaryRow> rows;
  std::vector<std::pair<std::string, std::size_t>> completed;  // per algorithm
};

struct ExperimentResult {
  std::vector<TrialOutcome> outcomes;  // ordered by (algorithm, trial)
  SummaryStats summary;
};

/// Environment for one trial. Synthetic objectives are redrawn per trial
/// (shared across algorithms) unless `env.redraw_per_trial` is false.
Environment build_environment(const ExperimentConfig& config, std::size_t trial);

/// AlgoConfig for one algorithm entry against a concrete environment.
AlgoConfig algo_config_for(const ExperimentConfig& config, const AlgoEntry& entry, const Environment& env);

/// Runs one trial; numeric and parameter errors are captured in `error`.
TrialOutcome run_trial_outcome(const ExperimentConfig& config, std::size_t algo_index, std::size_t trial,
                               const Environment& env);

/// Mean and sample std (n-1 denominator; 0 for a single series) of the
/// cumulative regret of completed trials, per algorithm in `algo_order`.
SummaryStats summarize(const std::vector<TrialOutcome>& outcomes, const std::vector<std::string>& algo_order);

/// Runs every (algorithm, trial) pair on `config.workers` threads, then
/// persists to `config.out`.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Writes trace_<algo>_<trial>.csv (when enabled), summary.csv and run.json.
void persist(const ExperimentResult& result, const ExperimentConfig& config, const std::filesystem::path& dir);

inline constexpr const char* kTraceHeader =
    "round,arm_index,raw_reward,private_reward,truncated_reward,beta,inst_regret,cum_regret";
inline constexpr const char* kSummaryHeader = "round,algo,mean_cum_regret,std_cum_regret";

/// Reads summary.csv, checking the column schema. Throws IngestionError
/// naming the missing or unexpected column.
std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path);

}  // namespace ldpbo
