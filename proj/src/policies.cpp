#include "fairlin/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fairlin {

// ---------------------------------------------------------------------------
// Shared state

void SufficientStats::observe(const Vector& x, double reward) {
  v.add_outer(x, 1.0);
  s += reward * x;
  ++n;
}

void SufficientStats::observe_batch(const Vector& x, long long count, double reward_sum) {
  v.add_outer(x, static_cast<double>(count));
  s += reward_sum * x;
  n += count;
}

Vector SufficientStats::estimate() const { return solve_spd(v, s).x; }

void RunTrace::reserve(long long n) {
  arm.reserve(n);
  true_mean.reserve(n);
  reward.reserve(n);
  phase.reserve(n);
}

void RunTrace::record(int arm_idx, double mean, double realized, Phase ph) {
  arm.push_back(arm_idx);
  true_mean.push_back(mean);
  reward.push_back(realized);
  phase.push_back(ph);
}

std::string_view to_string(PhaseTwo p) { return p == PhaseTwo::LinUcb ? "lin_ucb" : "lin_pe"; }

namespace {

double pull(const BanditInstance& env, int arm, RandomStream& rng, RunTrace& trace, Phase phase) {
  const double r = sample_reward(env, arm, rng);
  trace.record(arm, env.mean(arm), r, phase);
  return r;
}

double max_mean_estimate(const ArmSet& arms, const Vector& theta_hat) {
  return (arms.matrix().transpose() * theta_hat).maxCoeff();
}

// theta_hat = B (B^T V B)^{-1} B^T s for V supported on span(B).
Vector estimate_in_span(const SufficientStats& stats, const Matrix& basis) {
  if (basis.cols() == stats.dim()) return stats.estimate();
  const SymMatrix reduced(Matrix(basis.transpose() * stats.v.matrix() * basis));
  const Vector rhs = basis.transpose() * stats.s;
  return basis * solve_spd(reduced, rhs).x;
}

}  // namespace

// ---------------------------------------------------------------------------
// Phase I

Phase1Plan prepare_phase1(const BanditInstance& env, const PolicyConfig& config) {
  return {d_optimal_design(env.arms(), config.design), john_distribution(env.arms(), config.n_dirs)};
}

double p_normalize(double p) { return p >= -1.0 ? 1.0 : p; }

StoppingRuleParams stopping_params(const BanditInstance& env, const PolicyConfig& config) {
  return {config.stopping, env.sigma(), env.dim(), config.horizon, p_normalize(config.p)};
}

double stopping_width(long long t, const StoppingRuleParams& params) {
  const double dk = std::pow(static_cast<double>(params.d), params.rule.width_exponent);
  const double log_t = std::log(static_cast<double>(params.horizon));
  return std::sqrt(params.rule.c_lower * params.sigma * params.sigma * dk * log_t / static_cast<double>(t));
}

bool phase1_should_stop(long long t, double max_est, const StoppingRuleParams& params) {
  const double w = stopping_width(t, params);
  const double margin = max_est - w;
  if (!(margin > 0.0)) return false;
  const double dk = std::pow(static_cast<double>(params.d), params.rule.width_exponent);
  const double log_t = std::log(static_cast<double>(params.horizon));
  const double upper = params.rule.c_upper * params.p_a * params.p_a * params.sigma * params.sigma * dk * log_t;
  return static_cast<double>(t) * margin * margin > upper;
}

EpochSummary pull_arms_epoch(SufficientStats& stats, const JohnDistribution& john, const DesignWeights& design,
                             long long t_tilde, long long rounds, const BanditInstance& env,
                             RandomStream& rng, RunTrace& trace, const RunHooks& hooks) {
  std::vector<ScheduleEntry> schedule = round_robin_schedule(design.weights, t_tilde);
  std::vector<double> cdf;
  std::vector<int> atoms;
  double acc = 0.0;
  for (int i = 0; i < static_cast<int>(john.rho.size()); ++i) {
    if (john.rho[i] <= 0.0) continue;
    acc += john.rho[i];
    cdf.push_back(acc);
    atoms.push_back(i);
  }

  EpochSummary summary;
  std::size_t cursor = 0;
  std::size_t remaining = schedule.size();
  for (long long k = 0; k < rounds; ++k) {
    const bool design_flag = hooks.coin ? hooks.coin(rng) : rng.fair_coin();
    int arm;
    if (design_flag) ++summary.design_flips;
    if (design_flag && remaining > 0) {
      while (schedule[cursor].count == 0) cursor = (cursor + 1) % schedule.size();
      arm = schedule[cursor].arm;
      if (--schedule[cursor].count == 0) --remaining;
      cursor = (cursor + 1) % schedule.size();
      ++summary.schedule_pulls;
    } else {
      const double u = rng.uniform() * acc;
      const auto pos = std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
      arm = atoms[std::min<std::size_t>(pos, atoms.size() - 1)];
      ++summary.john_pulls;
    }
    const double r = pull(env, arm, rng, trace, Phase::I);
    stats.observe(env.arms().arm(arm), r);
    if (hooks.on_round) hooks.on_round(trace.size(), Phase::I, stats, 0.0);
  }
  return summary;
}

long long first_epoch_length(long long horizon) {
  const double len = std::ceil(72.0 * std::log(static_cast<double>(horizon)));
  return std::max(1LL, static_cast<long long>(len));
}

Phase1Result run_phase1(const BanditInstance& env, const Phase1Plan& plan, const PolicyConfig& config,
                        RandomStream& rng, RunTrace& trace, const RunHooks& hooks) {
  const long long horizon = config.horizon;
  const StoppingRuleParams params = stopping_params(env, config);
  Phase1Result out{SufficientStats(env.dim())};
  long long t_tilde = first_epoch_length(horizon);
  long long elapsed = 0;
  while (true) {
    const long long rounds = std::min(t_tilde, horizon - elapsed);
    pull_arms_epoch(out.stats, plan.john, plan.design, t_tilde, rounds, env, rng, trace, hooks);
    elapsed += rounds;
    if (elapsed >= horizon) break;
    const double max_est = max_mean_estimate(env.arms(), out.stats.estimate());
    if (phase1_should_stop(elapsed, max_est, params)) {
      out.stopped = true;
      break;
    }
    t_tilde *= 2;
  }
  // The listing doubles T~ after the final epoch and hands over T~ / 2.
  out.tau_reported = static_cast<double>(t_tilde);
  out.t_phase1 = elapsed;
  trace.tau_reported = out.tau_reported;
  trace.t_phase1 = out.t_phase1;
  return out;
}

// ---------------------------------------------------------------------------
// LinUCB

double beta_t(long long t, int d, double alpha, double sigma, long long horizon) {
  const double dd = static_cast<double>(d);
  const double inner = dd * std::log(1.0 + static_cast<double>(t - 1) / (dd * alpha)) +
                       2.0 * std::log(static_cast<double>(horizon));
  return sigma * std::sqrt(inner) + std::sqrt(alpha);
}

int argmax_lowest(const std::vector<double>& scores) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(scores.size()); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

int lin_ucb_step(const SufficientStats& stats, const ArmSet& arms, double beta) {
  const SpdFactor factor(stats.v, true);
  const Vector theta_hat = factor.solve(stats.s);
  const Vector widths = factor.inverse_quadratic_columns(arms.matrix());
  const Vector means = arms.matrix().transpose() * theta_hat;
  std::vector<double> scores(arms.size());
  for (int i = 0; i < arms.size(); ++i) scores[i] = means[i] + beta * std::sqrt(std::max(0.0, widths[i]));
  return argmax_lowest(scores);
}

namespace {

void lin_ucb_loop(SufficientStats& stats, double regularizer, const BanditInstance& env,
                  const PolicyConfig& config, RandomStream& rng, RunTrace& trace, const RunHooks& hooks) {
  trace.reserve(config.horizon);
  while (trace.size() < config.horizon) {
    const long long t = trace.size() + 1;
    const double beta = beta_t(t, env.dim(), config.alpha, env.sigma(), config.horizon);
    const int arm = lin_ucb_step(stats, env.arms(), beta);
    const double r = pull(env, arm, rng, trace, Phase::II);
    stats.observe(env.arms().arm(arm), r);
    if (hooks.on_round) hooks.on_round(trace.size(), Phase::II, stats, regularizer);
  }
}

}  // namespace

SufficientStats run_lin_ucb(SufficientStats stats, const BanditInstance& env, const PolicyConfig& config,
                            RandomStream& rng, RunTrace& trace, const RunHooks& hooks) {
  stats.v.add_identity(config.alpha);
  lin_ucb_loop(stats, config.alpha, env, config, rng, trace, hooks);
  return stats;
}

// ---------------------------------------------------------------------------
// Phased elimination

std::vector<int> surviving_set(const ArmSet& arms, const Vector& theta_hat, double threshold) {
  if (!(threshold >= 0.0)) throw std::invalid_argument("surviving_set: threshold must be nonnegative");
  const Vector est = arms.matrix().transpose() * theta_hat;
  const double cut = est.maxCoeff() - threshold;
  std::vector<int> out;
  for (int i = 0; i < arms.size(); ++i)
    if (est[i] >= cut) out.push_back(i);
  return out;
}

double elimination_threshold(int d, double sigma, long long horizon, double window) {
  const double dd = static_cast<double>(d);
  return 8.0 * std::sqrt(dd * dd * sigma * sigma * std::log(static_cast<double>(horizon)) / window);
}

SufficientStats run_lin_pe(const Phase1Result& phase1, const BanditInstance& env, const PolicyConfig& config,
                           RandomStream& rng, RunTrace& trace, const RunHooks& hooks) {
  const int d = env.dim();
  const long long horizon = config.horizon;
  const ArmSet& arms = env.arms();
  trace.reserve(horizon);

  std::vector<int> surviving =
      surviving_set(arms, phase1.stats.estimate(),
                    elimination_threshold(d, env.sigma(), horizon, phase1.tau_reported));
  if (hooks.on_surviving_set) hooks.on_surviving_set(trace.size(), surviving);

  double window = std::max(2.0 / 3.0 * phase1.tau_reported, static_cast<double>(d * (d + 1)));
  SufficientStats stats(d);
  while (trace.size() < horizon) {
    const SubspaceDesign sd = d_optimal_design_in_span(arms.subset(surviving), config.design);
    stats = SufficientStats(d);
    bool complete = true;
    for (int k : sd.design.support()) {
      const int arm = surviving[k];
      const long long wanted = std::max(1LL, ceil_count(sd.design.weights[k] * window));
      const long long n = std::min(wanted, horizon - trace.size());
      double reward_sum = 0.0;
      for (long long j = 0; j < n; ++j) reward_sum += pull(env, arm, rng, trace, Phase::II);
      stats.observe_batch(arms.arm(arm), n, reward_sum);
      if (hooks.on_round) hooks.on_round(trace.size(), Phase::II, stats, 0.0);
      if (n < wanted) {
        complete = false;
        break;
      }
    }
    if (!complete) break;
    const Vector theta_hat = estimate_in_span(stats, sd.basis);
    surviving = surviving_set(arms, theta_hat, elimination_threshold(d, env.sigma(), horizon, window));
    if (hooks.on_surviving_set) hooks.on_surviving_set(trace.size(), surviving);
    window *= 2.0;
  }
  return stats;
}

// ---------------------------------------------------------------------------
// Drivers

RunOutcome run_fair_lin_bandit(const BanditInstance& env, const Phase1Plan& plan, const PolicyConfig& config,
                               PhaseTwo policy, RandomStream& rng, const RunHooks& hooks) {
  if (config.horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  RunOutcome out{RunTrace{}, SufficientStats(env.dim())};
  out.trace.reserve(config.horizon);
  Phase1Result phase1 = run_phase1(env, plan, config, rng, out.trace, hooks);
  if (out.trace.size() >= config.horizon) {
    out.final_stats = std::move(phase1.stats);
    return out;
  }
  out.final_stats = policy == PhaseTwo::LinUcb ? run_lin_ucb(phase1.stats, env, config, rng, out.trace, hooks)
                                               : run_lin_pe(phase1, env, config, rng, out.trace, hooks);
  return out;
}

RunOutcome run_plain_lin_ucb_baseline(const BanditInstance& env, const PolicyConfig& config, RandomStream& rng,
                                      const RunHooks& hooks) {
  if (config.horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  RunOutcome out{RunTrace{}, SufficientStats(env.dim())};
  out.final_stats.v.add_identity(config.alpha);
  lin_ucb_loop(out.final_stats, config.alpha, env, config, rng, out.trace, hooks);
  return out;
}

}  // namespace fairlin
