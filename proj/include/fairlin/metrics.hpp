// Nash, p-mean and average regret over expected-reward traces.
#pragma once

#include <span>
#include <stdexcept>
#include <vector>

namespace fairlin {

/// Per-round expected rewards averaged over runs, with the optimal mean.
struct ExpectedRewardTrace {
  double mu_star = 0.0;
  std::vector<double> values;

  long long size() const { return static_cast<long long>(values.size()); }
};

/// Power mean of order p of nonnegative values. p == 0 is the geometric
/// mean; for p <= 0 any zero value makes the result 0. Computed in the log
/// domain for every p != 1.
double p_mean(std::span<const double> values, double p);

double nash_regret(const ExpectedRewardTrace& trace, long long upto);
double avg_regret(const ExpectedRewardTrace& trace, long long upto);
/// Routes p == 0 to nash_regret and p == 1 to avg_regret.
double p_regret(const ExpectedRewardTrace& trace, double p, long long upto);

/// values[t] = mean over runs of run_traces[r][t]; runs are summed in index
/// order. Throws std::invalid_argument on length mismatch or no runs.
ExpectedRewardTrace aggregate_runs(const std::vector<std::vector<double>>& run_traces, double mu_star);

struct RegretPoint {
  long long t = 0;
  double expected_reward = 0.0;
  double avg_regret = 0.0;
  double nash_regret = 0.0;
  /// Parallel to RegretReport::p_list.
  std::vector<double> p_regret;
};

struct RegretReport {
  double mu_star = 0.0;
  std::vector<double> p_list;
  std::vector<RegretPoint> points;
};

/// Log-spaced checkpoints from max(1, T / 10^4) to T inclusive,
/// deduplicated; at most `count` of them.
std::vector<long long> log_checkpoints(long long horizon, int count = 64);

/// Regrets at every checkpoint from one pass of prefix accumulators.
/// Checkpoints must be increasing and within [1, T].
RegretReport regret_report(const ExpectedRewardTrace& trace, const std::vector<long long>& checkpoints,
                           const std::vector<double>& p_list);

}  // namespace fairlin
