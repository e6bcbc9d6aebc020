// Experiment orchestration: JSON configs, seeded parallel runs,
// aggregation, and CSV / JSON outputs.
#pragma once

#include "fairlin/instances.hpp"
#include "fairlin/metrics.hpp"
#include "fairlin/policies.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fairlin {

/// Invalid or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Algorithm { FairLinUcb, FairLinPe, PlainLinUcb };

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view name);

struct ExperimentConfig {
  /// Normalized instance description: {"generator": {...}}, an inline
  /// instance document, or {"file": path}.
  nlohmann::json instance;
  Algorithm algo = Algorithm::FairLinUcb;
  std::string label;
  long long horizon = 1;
  std::vector<double> p_list{0.0};
  /// Fairness parameter the algorithm targets (feeds the stopping rule).
  double p = 0.0;
  std::optional<double> sigma;
  double alpha = 1.0;
  int runs = 10;
  std::uint64_t master_seed = 0;
  int checkpoints = 64;
  StoppingRule stopping;
  std::string output;
};

/// Rejects unknown keys and out-of-range values with ConfigError.
/// Relative instance file paths resolve against `base_dir`.
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& file);

/// Builds the environment the config describes, with the config's sigma
/// override applied.
BanditInstance build_instance(const ExperimentConfig& config);

PolicyConfig policy_config(const ExperimentConfig& config);

struct RunDiagnostics {
  int run = 0;
  std::uint64_t seed = 0;
  long long t_phase1 = 0;
  double tau_reported = 0.0;
  /// Absent for the plain baseline, which has no John distribution.
  std::optional<double> floor_ratio;
  double wall_ms = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  ExpectedRewardTrace aggregate;
  RegretReport report;
  std::vector<RunDiagnostics> runs;
};

struct ExecutionOptions {
  /// 0 selects hardware concurrency. FAIRLIN_THREADS caps either choice,
  /// and no more workers than runs are started.
  int threads = 0;
};

/// Worker count after applying FAIRLIN_THREADS.
int resolve_threads(int requested, int runs);

ExperimentResult run_experiment(const ExperimentConfig& config, const ExecutionOptions& exec = {});

/// Header: t,mean_expected_reward,avg_regret,nash_regret,p_regret_{p}...
std::string regret_csv(const RegretReport& report);
/// [{run, seed, t_phase1, tau_reported, floor_ratio}, ...]
std::string diagnostics_json(const std::vector<RunDiagnostics>& runs);
std::string timing_json(const std::vector<RunDiagnostics>& runs);

/// Writes regret.csv, runs.json and timing.json into `dir`.
void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir);

/// Shortest decimal form that round-trips, e.g. -1.5 or 0.5.
std::string format_p(double p);

struct CompareResult {
  std::vector<ExperimentResult> results;
};

/// {"experiments": [config, ...], "output": optional path}
std::vector<ExperimentConfig> parse_compare_config(const nlohmann::json& j,
                                                   const std::filesystem::path& base_dir = {},
                                                   std::string* output = nullptr);

/// Runs every config on the same instance and seed schedule. Throws
/// ConfigError when instance, horizon, runs, seed, checkpoints or p_list
/// differ between configs.
CompareResult compare(const std::vector<ExperimentConfig>& configs, const ExecutionOptions& exec = {});

/// One CSV with a leading algo column holding each config's label.
std::string compare_csv(const CompareResult& result);

}  // namespace fairlin
