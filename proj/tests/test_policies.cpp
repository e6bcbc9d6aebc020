#include "fairlin/metrics.hpp"
#include "fairlin/policies.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>

using namespace fairlin;

namespace {

const double kS = 1.0 / std::sqrt(2.0);

PolicyConfig config_for(long long horizon) {
  PolicyConfig c;
  c.horizon = horizon;
  return c;
}

// Stopping constants small enough that Phase II is reached at test scale.
PolicyConfig relaxed(long long horizon) {
  PolicyConfig c = config_for(horizon);
  c.stopping.c_lower = 1.0;
  c.stopping.c_upper = 1.0;
  return c;
}

bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

}  // namespace

TEST_CASE("p_normalize examples") {
  CHECK(p_normalize(0.5) == 1.0);
  CHECK(p_normalize(-1.0) == 1.0);
  CHECK(p_normalize(-2.0) == -2.0);
  CHECK(p_normalize(0.0) == 1.0);
}

TEST_CASE("phase1_should_stop examples") {
  StoppingRuleParams params;
  params.sigma = 0.5;
  params.d = 2;
  params.horizon = 10000;
  params.p_a = 1.0;
  CHECK(phase1_should_stop(100000, 0.8, params));
  CHECK_FALSE(phase1_should_stop(5000, 0.8, params));
  for (long long t : {1LL, 100LL, 1000000000LL}) CHECK_FALSE(phase1_should_stop(t, 0.0, params));

  // Direct formula oracle over a grid.
  const double ln_t = std::log(10000.0);
  for (long long t = 1000; t <= 1000000; t *= 3) {
    for (double m : {0.05, 0.3, 0.8, 1.0}) {
      const double w = std::sqrt(48.0 * 0.25 * 4.0 * ln_t / t);
      const bool expect = m - w > 0.0 && t * (m - w) * (m - w) > 900.0 * 0.25 * 4.0 * ln_t;
      CHECK(phase1_should_stop(t, m, params) == expect);
    }
  }

  // p_a^2 scales the upper threshold: t = 20000 passes for p_a = 1 only.
  CHECK(phase1_should_stop(20000, 0.8, params));
  params.p_a = -2.0;
  CHECK_FALSE(phase1_should_stop(20000, 0.8, params));
}

TEST_CASE("first epoch length") {
  CHECK(first_epoch_length(10000) == 664);
  CHECK(first_epoch_length(1) == 1);
  CHECK(first_epoch_length(2) == 50);
}

TEST_CASE("pull_arms_epoch counting and forced design rounds") {
  const BanditInstance env = make_synthetic_instance(3, 12, 3, 5);
  const PolicyConfig cfg = config_for(10000);
  const Phase1Plan plan = prepare_phase1(env, cfg);

  SufficientStats stats(3);
  RunTrace trace;
  RandomStream rng(1);
  pull_arms_epoch(stats, plan.john, plan.design, 300, 300, env, rng, trace);
  CHECK(trace.size() == 300);
  CHECK(stats.n == 300);
  pull_arms_epoch(stats, plan.john, plan.design, 600, 250, env, rng, trace);
  CHECK(trace.size() == 550);
  CHECK(stats.n == 550);

  const long long t_tilde = 900;
  const std::vector<ScheduleEntry> schedule = round_robin_schedule(plan.design.weights, t_tilde);
  long long total = 0;
  for (const ScheduleEntry& e : schedule) total += e.count;
  RunHooks forced;
  forced.coin = [](RandomStream&) { return true; };
  SufficientStats s2(3);
  RunTrace t2;
  const EpochSummary summary = pull_arms_epoch(s2, plan.john, plan.design, t_tilde, total, env, rng, t2, forced);
  CHECK(summary.schedule_pulls == total);
  CHECK(summary.john_pulls == 0);
  std::map<int, long long> counts;
  for (int a : t2.arm) ++counts[a];
  for (const ScheduleEntry& e : schedule) CHECK(counts[e.arm] == e.count);
}

TEST_CASE("fair coin frequency in PullArms") {
  const BanditInstance env = make_synthetic_instance(3, 12, 3, 5);
  const Phase1Plan plan = prepare_phase1(env, config_for(10000));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SufficientStats stats(3);
    RunTrace trace;
    RandomStream rng(seed);
    const EpochSummary s = pull_arms_epoch(stats, plan.john, plan.design, 1200, 1200, env, rng, trace);
    CHECK(std::abs(static_cast<double>(s.design_flips) - 600.0) <= 4.0 * std::sqrt(300.0));
    CHECK(s.schedule_pulls + s.john_pulls == 1200);
  }
}

TEST_CASE("noiseless Phase I stops at the first boundary") {
  const BanditInstance env = make_synthetic_instance(3, 20, 3, 2).with_sigma(0.0);
  const PolicyConfig cfg = config_for(10000);
  const Phase1Plan plan = prepare_phase1(env, cfg);
  RunTrace trace;
  RandomStream rng(3);
  const Phase1Result r = run_phase1(env, plan, cfg, rng, trace);
  CHECK(r.stopped);
  CHECK(r.t_phase1 == 664);
  CHECK(r.tau_reported == 664.0);
  CHECK(trace.t_phase1 == 664);
}

TEST_CASE("Phase I hard cap") {
  const BanditInstance env = make_synthetic_instance(3, 20, 3, 2);
  for (long long horizon : {10LL, 2000LL}) {
    const PolicyConfig cfg = config_for(horizon);
    RandomStream rng(4);
    const RunOutcome out = run_fair_lin_bandit(env, prepare_phase1(env, cfg), cfg, PhaseTwo::LinUcb, rng);
    CHECK(out.trace.size() == horizon);
    CHECK(out.trace.t_phase1 == horizon);
    CHECK(std::all_of(out.trace.phase.begin(), out.trace.phase.end(), [](Phase p) { return p == Phase::I; }));
  }
}

TEST_CASE("beta_t examples") {
  for (long long t : {1LL, 10LL, 1000LL}) CHECK(beta_t(t, 3, 4.0, 0.0, 1000) == doctest::Approx(2.0));
  // T = e is not an integer horizon; T = 3 exercises the same t = 1 branch.
  CHECK(beta_t(1, 3, 1.0, 1.0, 3) == doctest::Approx(std::sqrt(2.0 * std::log(3.0)) + 1.0));
  CHECK(beta_t(2, 1, 1.0, 1.0, 1) == doctest::Approx(std::sqrt(std::log(2.0)) + 1.0));
  double prev = 0.0;
  for (long long t = 1; t < 100000; t = t * 2 + 1) {
    const double b = beta_t(t, 4, 1.0, 0.5, 100000);
    CHECK(b >= prev);
    prev = b;
  }
}

TEST_CASE("lin_ucb_step examples") {
  const ArmSet basis(Matrix::Identity(2, 2));
  SufficientStats st(2);
  st.v = SymMatrix::diagonal((Vector(2) << 100.0, 1.0).finished());
  st.s = (Vector(2) << 50.0, 0.4).finished();
  CHECK(lin_ucb_step(st, basis, 1.0) == 1);
  CHECK(lin_ucb_step(st, basis, 0.0) == 0);

  const ArmSet twins = ArmSet::from_rows({{0.3, 0.4}, {0.3, 0.4}});
  SufficientStats id(2);
  id.v = SymMatrix::identity(2);
  CHECK(lin_ucb_step(id, twins, 1.0) == 0);
}

TEST_CASE("lin_ucb_step is invariant to positive score scaling") {
  RandomStream rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const BanditInstance env = make_synthetic_instance(3, 15, 3, trial);
    SufficientStats st(3);
    st.v = SymMatrix::identity(3);
    for (int k = 0; k < 20; ++k) st.observe(env.arms().arm(static_cast<int>(rng.index(15))), rng.normal());
    const double beta = rng.uniform() * 3.0;
    const double c = 0.1 + rng.uniform() * 10.0;
    SufficientStats scaled = st;
    scaled.s *= c;
    CHECK(lin_ucb_step(st, env.arms(), beta) == lin_ucb_step(scaled, env.arms(), beta * c));
  }
}

TEST_CASE("noiseless LinUCB with an exact estimate pulls the best arm") {
  const ArmSet arms = ArmSet::from_rows({{1, 0}, {0, 1}, {kS, kS}});
  const Vector theta = (Vector(2) << 0.8, 0.6).finished();
  const BanditInstance env(arms, theta, 0.0);
  SufficientStats st(2);
  st.observe_batch(arms.arm(0), 1000000, 0.8e6);
  st.observe_batch(arms.arm(1), 1000000, 0.6e6);
  RunTrace trace;
  RandomStream rng(0);
  run_lin_ucb(st, env, config_for(500), rng, trace);
  CHECK(trace.size() == 500);
  for (int a : trace.arm) CHECK(a == 2);
}

TEST_CASE("surviving_set examples") {
  const ArmSet arms = ArmSet::from_rows({{1, 0}, {0, 1}, {kS, kS}});
  const Vector e1 = Vector::Unit(2, 0);
  CHECK(surviving_set(arms, e1, 0.5) == std::vector<int>{0, 2});
  CHECK(surviving_set(arms, e1, 1e9) == std::vector<int>{0, 1, 2});
  CHECK(surviving_set(arms, e1, 0.0) == std::vector<int>{0});
  const ArmSet tied = ArmSet::from_rows({{1, 0}, {0, 1}, {1, 0}});
  CHECK(surviving_set(tied, e1, 0.0) == std::vector<int>{0, 2});
}

TEST_CASE("noiseless LinPE keeps only optimal arms") {
  const BanditInstance env = make_synthetic_instance(3, 20, 3, 6).with_sigma(0.0);
  const PolicyConfig cfg = config_for(20000);
  const int best = best_arm(env).index;
  std::vector<std::vector<int>> sets;
  RunHooks hooks;
  hooks.on_surviving_set = [&](long long, const std::vector<int>& s) { sets.push_back(s); };
  RandomStream rng(8);
  const RunOutcome out = run_fair_lin_bandit(env, prepare_phase1(env, cfg), cfg, PhaseTwo::LinPe, rng, hooks);
  CHECK(out.trace.size() == 20000);
  REQUIRE(sets.size() >= 2);
  for (const auto& s : sets) CHECK(s == std::vector<int>{best});
  for (long long t = out.trace.t_phase1; t < out.trace.size(); ++t) CHECK(out.trace.arm[t] == best);
}

TEST_CASE("traces have length T and consistent phase tags") {
  const BanditInstance env = make_synthetic_instance(4, 30, 2, 11);
  for (long long horizon : {1LL, 700LL, 5000LL, 12345LL}) {
    const PolicyConfig cfg = relaxed(horizon);
    const Phase1Plan plan = prepare_phase1(env, cfg);
    for (PhaseTwo policy : {PhaseTwo::LinUcb, PhaseTwo::LinPe}) {
      RandomStream rng(horizon);
      const RunOutcome out = run_fair_lin_bandit(env, plan, cfg, policy, rng);
      REQUIRE(out.trace.size() == horizon);
      for (long long t = 0; t < horizon; ++t) {
        CHECK(out.trace.phase[t] == (t < out.trace.t_phase1 ? Phase::I : Phase::II));
        CHECK(out.trace.true_mean[t] >= 0.0);
      }
    }
    RandomStream rng(horizon);
    CHECK(run_plain_lin_ucb_baseline(env, cfg, rng).trace.size() == horizon);
  }
}

TEST_CASE("runs are deterministic in the seed") {
  const BanditInstance env = make_synthetic_instance(3, 20, 3, 1);
  const PolicyConfig cfg = relaxed(6000);
  const Phase1Plan plan = prepare_phase1(env, cfg);
  for (PhaseTwo policy : {PhaseTwo::LinUcb, PhaseTwo::LinPe}) {
    RandomStream a(derive_seed(7, 3)), b(derive_seed(7, 3)), c(derive_seed(7, 4));
    const RunOutcome x = run_fair_lin_bandit(env, plan, cfg, policy, a);
    const RunOutcome y = run_fair_lin_bandit(env, plan, cfg, policy, b);
    const RunOutcome z = run_fair_lin_bandit(env, plan, cfg, policy, c);
    CHECK(x.trace == y.trace);
    CHECK(x.final_stats == y.final_stats);
    CHECK_FALSE(x.trace == z.trace);
  }
  RandomStream a(5), b(5);
  CHECK(run_plain_lin_ucb_baseline(env, cfg, a).trace == run_plain_lin_ucb_baseline(env, cfg, b).trace);
}

TEST_CASE("replaying a LinUCB trace reproduces the statistics bit-exactly") {
  const BanditInstance env = make_synthetic_instance(4, 25, 4, 9);
  const PolicyConfig cfg = relaxed(8000);
  RandomStream rng(21);
  const RunOutcome out = run_fair_lin_bandit(env, prepare_phase1(env, cfg), cfg, PhaseTwo::LinUcb, rng);
  REQUIRE(out.trace.t_phase1 < cfg.horizon);
  SufficientStats replay(4);
  for (long long t = 0; t < out.trace.size(); ++t) {
    if (t == out.trace.t_phase1) replay.v.add_identity(cfg.alpha);
    replay.observe(env.arms().arm(out.trace.arm[t]), out.trace.reward[t]);
  }
  CHECK(replay == out.final_stats);
}

TEST_CASE("UCB widths never grow during Phase II") {
  const BanditInstance env = make_synthetic_instance(3, 20, 3, 4);
  const PolicyConfig cfg = relaxed(6000);
  const Vector probe = env.arms().arm(0);
  double prev = INFINITY;
  int violations = 0, audited = 0;
  RunHooks hooks;
  hooks.on_round = [&](long long, Phase phase, const SufficientStats& st, double) {
    if (phase != Phase::II) return;
    const double w = std::sqrt(mahalanobis_sq(st.v, probe));
    if (w > prev * (1.0 + 1e-12)) ++violations;
    prev = w;
    ++audited;
  };
  RandomStream rng(2);
  run_fair_lin_bandit(env, prepare_phase1(env, cfg), cfg, PhaseTwo::LinUcb, rng, hooks);
  CHECK(audited > 0);
  CHECK(violations == 0);
}

TEST_CASE("confidence ellipsoid coverage (reduced scale)") {
  const BanditInstance env = make_synthetic_instance(3, 30, 3, 17);
  const PolicyConfig cfg = config_for(5000);
  const Phase1Plan plan = prepare_phase1(env, cfg);
  const std::vector<long long> audit = log_checkpoints(cfg.horizon, 32);
  const int runs = 40;
  int covered = 0;
  for (int r = 0; r < runs; ++r) {
    bool ok = true;
    std::size_t next = 0;
    RunHooks hooks;
    hooks.on_round = [&](long long t, Phase, const SufficientStats& st, double regularizer) {
      if (next >= audit.size() || audit[next] != t) return;
      ++next;
      SymMatrix vbar = st.v;
      if (regularizer == 0.0) vbar.add_identity(cfg.alpha);
      const Vector err = solve_spd(vbar, st.s).x - env.theta_star();
      const double lhs = std::sqrt(err.dot(vbar.matrix() * err));
      if (lhs > beta_t(t + 1, env.dim(), cfg.alpha, env.sigma(), cfg.horizon)) ok = false;
    };
    RandomStream rng(derive_seed(99, r));
    run_fair_lin_bandit(env, plan, cfg, PhaseTwo::LinUcb, rng, hooks);
    covered += ok;
  }
  CHECK(covered >= 0.95 * runs);
}

TEST_CASE("best arm survives LinPE elimination (reduced scale)") {
  const BanditInstance env = make_synthetic_instance(4, 40, 4, 23);
  const PolicyConfig cfg = relaxed(20000);
  const Phase1Plan plan = prepare_phase1(env, cfg);
  const int best = best_arm(env).index;
  const int runs = 40;
  int survived = 0, reached = 0;
  for (int r = 0; r < runs; ++r) {
    bool ok = true;
    int boundaries = 0;
    RunHooks hooks;
    hooks.on_surviving_set = [&](long long, const std::vector<int>& s) {
      ++boundaries;
      ok = ok && contains(s, best);
    };
    RandomStream rng(derive_seed(5, r));
    run_fair_lin_bandit(env, plan, cfg, PhaseTwo::LinPe, rng, hooks);
    reached += boundaries > 0;
    survived += ok;
  }
  CHECK(reached == runs);
  CHECK(survived >= 0.95 * runs);
}

TEST_CASE("plain LinUCB pays for pulling a zero-mean arm early") {
  // Arm 0 has mean 0 and the largest norm, so plain LinUCB pulls it in
  // round 1 and its per-trace geometric mean collapses. Neither the design
  // nor the John distribution of this instance puts mass on arm 0.
  const ArmSet arms = ArmSet::from_rows(
      {{0, 1}, {0.63, -0.57}, {0.38, 0.86}, {0.43, -0.31}, {0.54, -0.52}, {0.05, 0.31}});
  const BanditInstance env(arms, Vector::Unit(2, 0), 0.5);
  const PolicyConfig cfg = config_for(20000);
  const Phase1Plan plan = prepare_phase1(env, cfg);
  REQUIRE(plan.design.weights[0] == 0.0);
  REQUIRE(plan.john.rho[0] == 0.0);
  int worse = 0;
  for (int r = 0; r < 10; ++r) {
    RandomStream a(derive_seed(1, r)), b(derive_seed(1, r));
    const RunOutcome base = run_plain_lin_ucb_baseline(env, cfg, a);
    const RunOutcome fair = run_fair_lin_bandit(env, plan, cfg, PhaseTwo::LinUcb, b);
    CHECK(base.trace.arm[0] == 0);
    const double nb = nash_regret(ExpectedRewardTrace{env.best_mean(), base.trace.true_mean}, cfg.horizon);
    const double nf = nash_regret(ExpectedRewardTrace{env.best_mean(), fair.trace.true_mean}, cfg.horizon);
    worse += nb > nf;
  }
  CHECK(worse >= 6);
}
