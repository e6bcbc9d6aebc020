#include "fairlin/metrics.hpp"
#include "fairlin/rng.hpp"

#include "doctest.h"

#include <cmath>

using namespace fairlin;

namespace {

std::vector<double> random_trace(RandomStream& rng, int n, double lo) {
  std::vector<double> v(n);
  for (double& x : v) x = lo + (1.0 - lo) * rng.uniform();
  return v;
}

// Extended-precision power mean, computed without the log-domain tricks.
long double oracle_p_mean(const std::vector<double>& v, double p) {
  long double acc = 0.0L;
  if (p == 0.0) {
    for (double x : v) acc += std::log(static_cast<long double>(x));
    return std::exp(acc / v.size());
  }
  for (double x : v) acc += std::pow(static_cast<long double>(x), static_cast<long double>(p));
  return std::pow(acc / v.size(), 1.0L / p);
}

}  // namespace

TEST_CASE("p_mean examples") {
  const std::vector<double> same = {0.3, 0.3, 0.3};
  for (double p : {-2.0, -0.5, 0.0, 0.5, 1.0, 3.0}) CHECK(p_mean(same, p) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(p_mean(std::vector<double>{1.0, 4.0}, 0.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(p_mean(std::vector<double>{0.5, 2.0}, -1.0) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(p_mean(std::vector<double>{0.0, 1.0}, 0.0) == 0.0);
  CHECK(p_mean(std::vector<double>{0.0, 1.0}, -1.5) == 0.0);
  CHECK(p_mean(std::vector<double>{0.0, 1.0}, 0.5) == doctest::Approx(0.25));
}

TEST_CASE("regret examples") {
  const ExpectedRewardTrace flat{0.7, {0.7, 0.7, 0.7}};
  CHECK(nash_regret(flat, 3) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(avg_regret(flat, 3) == doctest::Approx(0.0).epsilon(1e-15));

  const ExpectedRewardTrace tr{1.0, {1.0, 0.25, 1.0, 0.25}};
  CHECK(nash_regret(tr, 4) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(nash_regret(tr, 1) == doctest::Approx(0.0));
  CHECK(avg_regret(ExpectedRewardTrace{1.0, {1.0, 0.0}}, 2) == 0.5);
  CHECK(nash_regret(ExpectedRewardTrace{1.0, {1.0, 0.0}}, 2) == 1.0);

  CHECK_THROWS_AS(nash_regret(tr, 0), std::out_of_range);
  CHECK_THROWS_AS(avg_regret(tr, 5), std::out_of_range);
}

TEST_CASE("p_regret routes p = 0 and p = 1 bit-identically") {
  RandomStream rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const ExpectedRewardTrace tr{1.0, random_trace(rng, 1 + static_cast<int>(rng.index(500)), 0.0)};
    const long long upto = 1 + static_cast<long long>(rng.index(tr.size()));
    CHECK(p_regret(tr, 1.0, upto) == avg_regret(tr, upto));
    CHECK(p_regret(tr, 0.0, upto) == nash_regret(tr, upto));
  }
}

TEST_CASE("AM-GM ordering on random traces") {
  RandomStream rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const ExpectedRewardTrace tr{1.0, random_trace(rng, 200, trial % 3 == 0 ? 0.0 : 0.01)};
    for (long long upto = 1; upto <= tr.size(); upto += 7)
      CHECK(nash_regret(tr, upto) >= avg_regret(tr, upto) - 1e-9);
  }
}

TEST_CASE("power-mean monotonicity against an extended-precision oracle") {
  const std::vector<double> grid = {-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0};
  RandomStream rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const std::vector<double> v = random_trace(rng, 1 + static_cast<int>(rng.index(300)), 0.001);
    const ExpectedRewardTrace tr{1.0, v};
    double prev = INFINITY;
    for (double p : grid) {
      const double r = p_regret(tr, p, tr.size());
      CHECK(r <= prev + 1e-9);
      prev = r;
      CHECK(p_mean(v, p) == doctest::Approx(static_cast<double>(oracle_p_mean(v, p))).epsilon(1e-12));
    }
  }
}

TEST_CASE("log-domain geometric mean matches the naive product") {
  RandomStream rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    const std::vector<double> v = random_trace(rng, 1 + static_cast<int>(rng.index(40)), 0.1);
    double prod = 1.0;
    for (double x : v) prod *= x;
    CHECK(std::abs(p_mean(v, 0.0) - std::pow(prod, 1.0 / v.size())) <= 1e-9);
  }
  // Long traces would underflow a naive product.
  const std::vector<double> tiny(100000, 1e-3);
  CHECK(p_mean(tiny, 0.0) == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(p_mean(tiny, -1.5) == doctest::Approx(1e-3).epsilon(1e-12));
}

TEST_CASE("aggregate_runs") {
  const std::vector<double> a = {0.1, 0.2, 0.3};
  const std::vector<double> b = {0.3, 0.4, 0.5};
  CHECK(aggregate_runs({a}, 1.0).values == a);
  const ExpectedRewardTrace two = aggregate_runs({a, b}, 1.0);
  for (int t = 0; t < 3; ++t) CHECK(two.values[t] == doctest::Approx((a[t] + b[t]) / 2));
  const ExpectedRewardTrace swapped = aggregate_runs({b, a}, 1.0);
  for (int t = 0; t < 3; ++t) CHECK(swapped.values[t] == doctest::Approx(two.values[t]).epsilon(1e-15));
  CHECK(two.mu_star == 1.0);
  CHECK_THROWS_AS(aggregate_runs({a, {0.1}}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(aggregate_runs({}, 1.0), std::invalid_argument);
}

TEST_CASE("log_checkpoints") {
  const std::vector<long long> c = log_checkpoints(100000);
  CHECK(c.front() == 10);
  CHECK(c.back() == 100000);
  CHECK(c.size() <= 64);
  for (std::size_t i = 1; i < c.size(); ++i) CHECK(c[i] > c[i - 1]);

  const std::vector<long long> small = log_checkpoints(5);
  CHECK(small.front() == 1);
  CHECK(small.back() == 5);
  CHECK(small.size() == 5);
  CHECK(log_checkpoints(1) == std::vector<long long>{1});
}

TEST_CASE("regret_report agrees with direct evaluation") {
  RandomStream rng(12);
  const ExpectedRewardTrace tr{1.0, random_trace(rng, 5000, 0.05)};
  const std::vector<double> ps = {-1.5, 0.5};
  const std::vector<long long> cps = log_checkpoints(tr.size(), 20);
  const RegretReport rep = regret_report(tr, cps, ps);
  REQUIRE(rep.points.size() == cps.size());
  for (const RegretPoint& pt : rep.points) {
    CHECK(pt.expected_reward == tr.values[pt.t - 1]);
    CHECK(pt.avg_regret == doctest::Approx(avg_regret(tr, pt.t)).epsilon(1e-12));
    CHECK(pt.nash_regret == doctest::Approx(nash_regret(tr, pt.t)).epsilon(1e-12));
    for (std::size_t k = 0; k < ps.size(); ++k)
      CHECK(pt.p_regret[k] == doctest::Approx(p_regret(tr, ps[k], pt.t)).epsilon(1e-12));
  }
  CHECK_THROWS(regret_report(tr, {5, 3}, ps));
  CHECK_THROWS(regret_report(tr, {0}, ps));
}
