#include "fairlin/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace fairlin {

namespace {

double checked_value(double v) {
  if (!(v >= -1e-12)) throw std::invalid_argument("power mean: values must be nonnegative");
  return v > 0.0 ? v : 0.0;
}

// Streaming power mean. The arithmetic case is a plain sum; every other
// order accumulates p ln v with a rescaled log-sum-exp, so neither long
// products nor large negative powers under- or overflow.
class PowerMeanAccumulator {
 public:
  explicit PowerMeanAccumulator(double p) : p_(p) {}

  void add(double raw) {
    const double v = checked_value(raw);
    ++n_;
    if (p_ == 1.0) {
      sum_ += v;
      return;
    }
    if (v == 0.0) {
      if (p_ <= 0.0) saw_zero_ = true;
      return;
    }
    const double lv = std::log(v);
    if (p_ == 0.0) {
      sum_ += lv;
      return;
    }
    const double e = p_ * lv;
    if (e <= max_) {
      sum_ += std::exp(e - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - e) + 1.0;
      max_ = e;
    }
  }

  double value() const {
    if (n_ == 0) throw std::invalid_argument("power mean of an empty sequence");
    const double n = static_cast<double>(n_);
    if (p_ == 1.0) return sum_ / n;
    if (saw_zero_) return 0.0;
    if (p_ == 0.0) return std::exp(sum_ / n);
    if (sum_ == 0.0) return 0.0;  // p > 0 and every value zero
    return std::exp((max_ + std::log(sum_) - std::log(n)) / p_);
  }

 private:
  double p_;
  long long n_ = 0;
  double sum_ = 0.0;
  double max_ = -std::numeric_limits<double>::infinity();
  bool saw_zero_ = false;
};

double prefix_mean(const ExpectedRewardTrace& trace, double p, long long upto) {
  if (upto < 1 || upto > trace.size())
    throw std::out_of_range("regret prefix length " + std::to_string(upto) + " outside [1, T]");
  PowerMeanAccumulator acc(p);
  for (long long t = 0; t < upto; ++t) acc.add(trace.values[t]);
  return acc.value();
}

}  // namespace

double p_mean(std::span<const double> values, double p) {
  if (values.empty()) throw std::invalid_argument("power mean of an empty sequence");
  PowerMeanAccumulator acc(p);
  for (double v : values) acc.add(v);
  return acc.value();
}

double nash_regret(const ExpectedRewardTrace& trace, long long upto) {
  return trace.mu_star - prefix_mean(trace, 0.0, upto);
}

double avg_regret(const ExpectedRewardTrace& trace, long long upto) {
  return trace.mu_star - prefix_mean(trace, 1.0, upto);
}

double p_regret(const ExpectedRewardTrace& trace, double p, long long upto) {
  if (p == 0.0) return nash_regret(trace, upto);
  if (p == 1.0) return avg_regret(trace, upto);
  return trace.mu_star - prefix_mean(trace, p, upto);
}

ExpectedRewardTrace aggregate_runs(const std::vector<std::vector<double>>& run_traces, double mu_star) {
  if (run_traces.empty()) throw std::invalid_argument("aggregate_runs: no runs");
  const std::size_t len = run_traces.front().size();
  for (const auto& r : run_traces)
    if (r.size() != len) throw std::invalid_argument("aggregate_runs: runs have different lengths");
  ExpectedRewardTrace out;
  out.mu_star = mu_star;
  out.values.assign(len, 0.0);
  for (const auto& r : run_traces)
    for (std::size_t t = 0; t < len; ++t) out.values[t] += r[t];
  const double runs = static_cast<double>(run_traces.size());
  for (double& v : out.values) v = std::max(0.0, v / runs);
  return out;
}

std::vector<long long> log_checkpoints(long long horizon, int count) {
  if (horizon < 1) throw std::invalid_argument("log_checkpoints: horizon must be >= 1");
  if (count < 1) throw std::invalid_argument("log_checkpoints: need at least one checkpoint");
  const long long start = std::max(1LL, horizon / 10000);
  std::vector<long long> out;
  if (count == 1 || start == horizon) return {horizon};
  const double ratio = std::log(static_cast<double>(horizon) / static_cast<double>(start));
  for (int k = 0; k < count; ++k) {
    const double f = static_cast<double>(k) / static_cast<double>(count - 1);
    auto t = static_cast<long long>(std::llround(static_cast<double>(start) * std::exp(ratio * f)));
    t = std::clamp(t, start, horizon);
    if (out.empty() || t > out.back()) out.push_back(t);
  }
  if (out.back() != horizon) out.push_back(horizon);
  return out;
}

RegretReport regret_report(const ExpectedRewardTrace& trace, const std::vector<long long>& checkpoints,
                           const std::vector<double>& p_list) {
  RegretReport report;
  report.mu_star = trace.mu_star;
  report.p_list = p_list;
  PowerMeanAccumulator arith(1.0);
  PowerMeanAccumulator geo(0.0);
  std::vector<PowerMeanAccumulator> powers;
  for (double p : p_list) powers.emplace_back(p);

  long long t = 0;
  for (long long cp : checkpoints) {
    if (cp < 1 || cp > trace.size() || cp <= t)
      throw std::invalid_argument("regret_report: checkpoints must increase within [1, T]");
    for (; t < cp; ++t) {
      const double v = trace.values[t];
      arith.add(v);
      geo.add(v);
      for (std::size_t k = 0; k < p_list.size(); ++k)
        if (p_list[k] != 0.0 && p_list[k] != 1.0) powers[k].add(v);
    }
    RegretPoint pt;
    pt.t = cp;
    pt.expected_reward = trace.values[cp - 1];
    pt.avg_regret = trace.mu_star - arith.value();
    pt.nash_regret = trace.mu_star - geo.value();
    for (std::size_t k = 0; k < p_list.size(); ++k) {
      const double p = p_list[k];
      pt.p_regret.push_back(p == 0.0 ? pt.nash_regret
                            : p == 1.0 ? pt.avg_regret
                                       : trace.mu_star - powers[k].value());
    }
    report.points.push_back(std::move(pt));
  }
  return report;
}

}  // namespace fairlin
