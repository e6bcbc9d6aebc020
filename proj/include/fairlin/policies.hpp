// FairLinBandit: a Phase-I exploration stage built from D-optimal and
// John-center pulls with a data-adaptive stopping rule, followed by a
// pluggable Phase-II policy (LinUCB or phased elimination). Also the plain
// LinUCB baseline without Phase I.
//
// All logarithms are natural. All argmax ties go to the lowest arm index.
#pragma once

#include "fairlin/design.hpp"
#include "fairlin/geometry.hpp"
#include "fairlin/instances.hpp"
#include "fairlin/numerics.hpp"
#include "fairlin/rng.hpp"

#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

namespace fairlin {

/// Running least-squares statistics: V = sum w x x^T (+ any regularizer),
/// s = sum r x, n = number of reward observations.
struct SufficientStats {
  SymMatrix v;
  Vector s;
  long long n = 0;

  explicit SufficientStats(int d) : v(d), s(Vector::Zero(d)) {}

  int dim() const { return v.dim(); }
  void observe(const Vector& x, double reward);
  /// `count` pulls of x with rewards summing to `reward_sum`.
  void observe_batch(const Vector& x, long long count, double reward_sum);
  /// V^{-1} s, jittered if V is singular.
  Vector estimate() const;
  bool operator==(const SufficientStats&) const = default;
};

/// Constants of the Phase-I stopping rule. Defaults reproduce the
/// published rule; other values express variant rules of the same shape.
struct StoppingRule {
  double c_lower = 48.0;
  double c_upper = 900.0;
  double width_exponent = 2.0;
};

struct StoppingRuleParams {
  StoppingRule rule;
  double sigma = 0.5;
  int d = 1;
  long long horizon = 1;
  double p_a = 1.0;
};

enum class Phase : std::uint8_t { I = 1, II = 2 };

/// Per-round record of a run, stored column-wise.
struct RunTrace {
  std::vector<int> arm;
  std::vector<double> true_mean;
  std::vector<double> reward;
  std::vector<Phase> phase;
  /// tau handed to Phase II (half the doubled epoch length).
  double tau_reported = 0.0;
  /// Rounds actually spent in Phase I.
  long long t_phase1 = 0;

  long long size() const { return static_cast<long long>(arm.size()); }
  void reserve(long long n);
  void record(int arm_idx, double mean, double realized, Phase ph);
  bool operator==(const RunTrace&) const = default;
};

enum class PhaseTwo { LinUcb, LinPe };

std::string_view to_string(PhaseTwo p);

struct PolicyConfig {
  long long horizon = 1;
  /// Fairness parameter of the targeted p-mean; 0 is Nash welfare.
  double p = 0.0;
  double alpha = 1.0;
  StoppingRule stopping;
  DesignOptions design;
  /// Probe directions for the Chebyshev center; <= 0 selects the default.
  int n_dirs = 0;
};

/// Optional instrumentation. Unset members cost one branch per use.
struct RunHooks {
  /// Replaces the Phase-I fair coin; returns true for a design (D) round.
  std::function<bool(RandomStream&)> coin;
  /// After every round t (1-based): the statistics backing the next
  /// estimate, and the multiple of I already folded into them.
  std::function<void(long long t, Phase phase, const SufficientStats& stats, double regularizer)> on_round;
  /// Each time phased elimination computes a surviving set.
  std::function<void(long long t, const std::vector<int>& surviving)> on_surviving_set;
};

/// Design and John distribution over the full arm set; computed once per
/// instance and shared by every run on it.
struct Phase1Plan {
  DesignWeights design;
  JohnDistribution john;
};

Phase1Plan prepare_phase1(const BanditInstance& env, const PolicyConfig& config);

/// 1 if p >= -1, else p.
double p_normalize(double p);

StoppingRuleParams stopping_params(const BanditInstance& env, const PolicyConfig& config);

/// Confidence width sqrt(c_lower sigma^2 d^k ln T / t).
double stopping_width(long long t, const StoppingRuleParams& params);

/// True (leave Phase I) iff max_est - w > 0 and
/// t (max_est - w)^2 > c_upper p_a^2 sigma^2 d^k ln T.
bool phase1_should_stop(long long t, double max_est, const StoppingRuleParams& params);

struct EpochSummary {
  long long design_flips = 0;
  long long schedule_pulls = 0;
  long long john_pulls = 0;
};

/// Runs `rounds` (<= t_tilde) rounds of the PullArms subroutine, whose
/// schedule is built for an epoch of nominal length t_tilde. Statistics
/// accumulate; they are never reset between epochs.
EpochSummary pull_arms_epoch(SufficientStats& stats, const JohnDistribution& john, const DesignWeights& design,
                             long long t_tilde, long long rounds, const BanditInstance& env,
                             RandomStream& rng, RunTrace& trace, const RunHooks& hooks = {});

/// max(1, ceil(72 ln T))
long long first_epoch_length(long long horizon);

struct Phase1Result {
  SufficientStats stats;
  double tau_reported = 0.0;
  long long t_phase1 = 0;
  bool stopped = false;
};

Phase1Result run_phase1(const BanditInstance& env, const Phase1Plan& plan, const PolicyConfig& config,
                        RandomStream& rng, RunTrace& trace, const RunHooks& hooks = {});

/// sigma sqrt(d ln(1 + (t-1)/(d alpha)) + 2 ln T) + sqrt(alpha)
double beta_t(long long t, int d, double alpha, double sigma, long long horizon);

/// Lowest index maximizing <x, theta_hat> + beta ||x||_{V^{-1}}, with V the
/// regularized design matrix in `stats`.
int lin_ucb_step(const SufficientStats& stats, const ArmSet& arms, double beta);

/// Index of the largest entry, lowest index on ties.
int argmax_lowest(const std::vector<double>& scores);

/// Adds alpha I to the Phase-I statistics and runs LinUCB until the trace
/// holds `horizon` rounds. Returns the final regularized statistics.
SufficientStats run_lin_ucb(SufficientStats stats, const BanditInstance& env, const PolicyConfig& config,
                            RandomStream& rng, RunTrace& trace, const RunHooks& hooks = {});

/// { i : <x_i, theta_hat> >= max_z <z, theta_hat> - threshold }, ascending.
std::vector<int> surviving_set(const ArmSet& arms, const Vector& theta_hat, double threshold);

/// 8 sqrt(d^2 sigma^2 ln T / window)
double elimination_threshold(int d, double sigma, long long horizon, double window);

/// Phased elimination from the Phase-I statistics until the trace holds
/// `horizon` rounds. Returns the statistics of the last episode.
SufficientStats run_lin_pe(const Phase1Result& phase1, const BanditInstance& env, const PolicyConfig& config,
                           RandomStream& rng, RunTrace& trace, const RunHooks& hooks = {});

struct RunOutcome {
  RunTrace trace;
  SufficientStats final_stats;
};

RunOutcome run_fair_lin_bandit(const BanditInstance& env, const Phase1Plan& plan, const PolicyConfig& config,
                               PhaseTwo policy, RandomStream& rng, const RunHooks& hooks = {});

/// LinUCB from round 1 with V = alpha I, s = 0.
RunOutcome run_plain_lin_ucb_baseline(const BanditInstance& env, const PolicyConfig& config, RandomStream& rng,
                                      const RunHooks& hooks = {});

}  // namespace fairlin
