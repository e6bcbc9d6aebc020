#include "fairlin/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace fairlin {

namespace {

using nlohmann::json;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{"instance", "algo",        "label",       "T",        "p_list",
                                          "p",        "sigma",       "alpha",       "runs",     "master_seed",
                                          "checkpoints", "stopping", "output"};
  return keys;
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <typename T>
T get_as(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": key '" + key + "' is missing or has the wrong type");
  }
}

json normalize_instance(const json& spec, const std::filesystem::path& base_dir) {
  if (!spec.is_object()) throw ConfigError("instance: must be an object");
  if (spec.contains("generator")) {
    reject_unknown(spec, {"generator"}, "instance");
    const json& g = spec.at("generator");
    if (!g.is_object()) throw ConfigError("instance.generator: must be an object");
    reject_unknown(g, {"d", "n_arms", "sparsity", "instance_seed"}, "instance.generator");
    const int d = get_as<int>(g, "d", "instance.generator");
    const int n = get_as<int>(g, "n_arms", "instance.generator");
    const int sparsity = g.contains("sparsity") ? get_as<int>(g, "sparsity", "instance.generator") : d;
    const auto seed = g.contains("instance_seed") ? get_as<std::uint64_t>(g, "instance_seed", "instance.generator") : 0;
    if (d < 1 || d > 64 || n < d || sparsity < 1 || sparsity > d)
      throw ConfigError("instance.generator: need 1 <= d <= 64, n_arms >= d, 1 <= sparsity <= d");
    return {{"generator", {{"d", d}, {"n_arms", n}, {"sparsity", sparsity}, {"instance_seed", seed}}}};
  }
  if (spec.contains("file")) {
    reject_unknown(spec, {"file"}, "instance");
    std::filesystem::path p = get_as<std::string>(spec, "file", "instance");
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    return {{"file", std::filesystem::absolute(p).lexically_normal().string()}};
  }
  try {
    instance_from_json(spec);
  } catch (const InvalidInstance& e) {
    throw ConfigError(std::string("instance: ") + e.what());
  }
  return spec;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << contents;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

struct RunPayload {
  std::vector<double> true_means;
  RunDiagnostics diag;
};

}  // namespace

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::FairLinUcb: return "fair_lin_ucb";
    case Algorithm::FairLinPe: return "fair_lin_pe";
    case Algorithm::PlainLinUcb: return "plain_lin_ucb";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "fair_lin_ucb") return Algorithm::FairLinUcb;
  if (name == "fair_lin_pe") return Algorithm::FairLinPe;
  if (name == "plain_lin_ucb") return Algorithm::PlainLinUcb;
  throw ConfigError("unknown algo '" + std::string(name) + "' (fair_lin_ucb, fair_lin_pe, plain_lin_ucb)");
}

ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  const std::string where = "config";
  if (!j.is_object()) throw ConfigError("config: must be a JSON object");
  reject_unknown(j, known_keys(), where);

  ExperimentConfig c;
  if (!j.contains("instance")) throw ConfigError("config: 'instance' is required");
  c.instance = normalize_instance(j.at("instance"), base_dir);
  c.algo = parse_algorithm(get_as<std::string>(j, "algo", where));
  c.label = j.contains("label") ? get_as<std::string>(j, "label", where) : std::string(to_string(c.algo));
  c.horizon = get_as<long long>(j, "T", where);
  if (j.contains("p_list")) c.p_list = get_as<std::vector<double>>(j, "p_list", where);
  if (j.contains("p")) c.p = get_as<double>(j, "p", where);
  if (j.contains("sigma")) c.sigma = get_as<double>(j, "sigma", where);
  if (j.contains("alpha")) c.alpha = get_as<double>(j, "alpha", where);
  if (j.contains("runs")) c.runs = get_as<int>(j, "runs", where);
  if (j.contains("master_seed")) c.master_seed = get_as<std::uint64_t>(j, "master_seed", where);
  if (j.contains("checkpoints")) c.checkpoints = get_as<int>(j, "checkpoints", where);
  if (j.contains("output")) c.output = get_as<std::string>(j, "output", where);
  if (j.contains("stopping")) {
    const json& s = j.at("stopping");
    if (!s.is_object()) throw ConfigError("config.stopping: must be an object");
    reject_unknown(s, {"c_lower", "c_upper", "width_exponent"}, "config.stopping");
    if (s.contains("c_lower")) c.stopping.c_lower = get_as<double>(s, "c_lower", "config.stopping");
    if (s.contains("c_upper")) c.stopping.c_upper = get_as<double>(s, "c_upper", "config.stopping");
    if (s.contains("width_exponent"))
      c.stopping.width_exponent = get_as<double>(s, "width_exponent", "config.stopping");
  }

  if (c.horizon < 1) throw ConfigError("config: T must be >= 1");
  if (c.runs < 1) throw ConfigError("config: runs must be >= 1");
  if (c.p_list.empty()) throw ConfigError("config: p_list must be nonempty");
  for (double p : c.p_list)
    if (!std::isfinite(p)) throw ConfigError("config: p_list entries must be finite");
  if (!std::isfinite(c.p)) throw ConfigError("config: p must be finite");
  if (c.sigma && !(*c.sigma >= 0.0 && std::isfinite(*c.sigma))) throw ConfigError("config: sigma must be >= 0");
  if (!(c.alpha > 0.0) || !std::isfinite(c.alpha)) throw ConfigError("config: alpha must be > 0");
  if (c.checkpoints < 1) throw ConfigError("config: checkpoints must be >= 1");
  if (!(c.stopping.c_lower > 0.0) || !(c.stopping.c_upper > 0.0) || !std::isfinite(c.stopping.width_exponent))
    throw ConfigError("config.stopping: c_lower and c_upper must be > 0");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config file " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + file.string() + ": " + e.what());
  }
  return parse_config(j, file.parent_path());
}

BanditInstance build_instance(const ExperimentConfig& config) {
  const json& spec = config.instance;
  std::optional<BanditInstance> inst;
  if (spec.contains("generator")) {
    const json& g = spec.at("generator");
    inst.emplace(make_synthetic_instance(g.at("d").get<int>(), g.at("n_arms").get<int>(),
                                         g.at("sparsity").get<int>(), g.at("instance_seed").get<std::uint64_t>()));
  } else if (spec.contains("file")) {
    const std::string path = spec.at("file").get<std::string>();
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read instance file " + path);
    try {
      inst.emplace(instance_from_json(json::parse(in)));
    } catch (const json::parse_error& e) {
      throw ConfigError("instance file " + path + ": " + e.what());
    } catch (const InvalidInstance& e) {
      throw ConfigError("instance file " + path + ": " + e.what());
    }
  } else {
    inst.emplace(instance_from_json(spec));
  }
  if (config.sigma) return inst->with_sigma(*config.sigma);
  return *inst;
}

PolicyConfig policy_config(const ExperimentConfig& config) {
  PolicyConfig pc;
  pc.horizon = config.horizon;
  pc.p = config.p;
  pc.alpha = config.alpha;
  pc.stopping = config.stopping;
  return pc;
}

int resolve_threads(int requested, int runs) {
  int threads = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("FAIRLIN_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) threads = std::min(threads, cap);
  }
  return std::clamp(threads, 1, std::max(1, runs));
}

ExperimentResult run_experiment(const ExperimentConfig& config, const ExecutionOptions& exec) {
  const BanditInstance env = build_instance(config);
  const PolicyConfig pc = policy_config(config);
  const bool fair = config.algo != Algorithm::PlainLinUcb;
  std::optional<Phase1Plan> plan;
  std::optional<double> floor_ratio;
  if (fair) {
    plan.emplace(prepare_phase1(env, pc));
    floor_ratio = welfare_floor_check(plan->john, env);
  }

  std::vector<RunPayload> payloads(config.runs);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next++; r < config.runs; r = next++) {
      const auto start = std::chrono::steady_clock::now();
      const std::uint64_t seed = derive_seed(config.master_seed, static_cast<std::uint64_t>(r));
      RandomStream rng(seed);
      RunOutcome outcome = [&] {
        switch (config.algo) {
          case Algorithm::FairLinUcb: return run_fair_lin_bandit(env, *plan, pc, PhaseTwo::LinUcb, rng);
          case Algorithm::FairLinPe: return run_fair_lin_bandit(env, *plan, pc, PhaseTwo::LinPe, rng);
          case Algorithm::PlainLinUcb: break;
        }
        return run_plain_lin_ucb_baseline(env, pc, rng);
      }();
      RunPayload& out = payloads[r];
      out.true_means = std::move(outcome.trace.true_mean);
      out.diag.run = r;
      out.diag.seed = seed;
      out.diag.t_phase1 = outcome.trace.t_phase1;
      out.diag.tau_reported = outcome.trace.tau_reported;
      out.diag.floor_ratio = floor_ratio;
      out.diag.wall_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
  };

  const int threads = resolve_threads(exec.threads, config.runs);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  ExperimentResult result;
  result.config = config;
  std::vector<std::vector<double>> means;
  means.reserve(config.runs);
  for (RunPayload& p : payloads) {
    means.push_back(std::move(p.true_means));
    result.runs.push_back(p.diag);
  }
  result.aggregate = aggregate_runs(means, env.best_mean());
  result.report =
      regret_report(result.aggregate, log_checkpoints(config.horizon, config.checkpoints), config.p_list);
  return result;
}

std::string format_p(double p) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, p);
  return std::string(buf, res.ptr);
}

namespace {

std::string csv_header(const std::vector<double>& p_list) {
  std::string h = "t,mean_expected_reward,avg_regret,nash_regret";
  for (double p : p_list) h += ",p_regret_" + format_p(p);
  return h;
}

std::string csv_row(const RegretPoint& pt) {
  std::string row = std::to_string(pt.t) + "," + format_double(pt.expected_reward) + "," +
                    format_double(pt.avg_regret) + "," + format_double(pt.nash_regret);
  for (double v : pt.p_regret) row += "," + format_double(v);
  return row;
}

}  // namespace

std::string regret_csv(const RegretReport& report) {
  std::string out = csv_header(report.p_list) + "\n";
  for (const RegretPoint& pt : report.points) out += csv_row(pt) + "\n";
  return out;
}

std::string diagnostics_json(const std::vector<RunDiagnostics>& runs) {
  json arr = json::array();
  for (const RunDiagnostics& d : runs) {
    arr.push_back({{"run", d.run},
                   {"seed", d.seed},
                   {"t_phase1", d.t_phase1},
                   {"tau_reported", d.tau_reported},
                   {"floor_ratio", d.floor_ratio ? json(*d.floor_ratio) : json(nullptr)}});
  }
  return arr.dump(2) + "\n";
}

std::string timing_json(const std::vector<RunDiagnostics>& runs) {
  json arr = json::array();
  for (const RunDiagnostics& d : runs) arr.push_back({{"run", d.run}, {"wall_ms", d.wall_ms}});
  return arr.dump(2) + "\n";
}

void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "regret.csv", regret_csv(result.report));
  write_file(dir / "runs.json", diagnostics_json(result.runs));
  write_file(dir / "timing.json", timing_json(result.runs));
}

std::vector<ExperimentConfig> parse_compare_config(const json& j, const std::filesystem::path& base_dir,
                                                   std::string* output) {
  if (!j.is_object()) throw ConfigError("compare config: must be a JSON object");
  reject_unknown(j, {"experiments", "output"}, "compare config");
  if (!j.contains("experiments") || !j.at("experiments").is_array() || j.at("experiments").empty())
    throw ConfigError("compare config: 'experiments' must be a nonempty array");
  std::vector<ExperimentConfig> configs;
  for (const json& e : j.at("experiments")) configs.push_back(parse_config(e, base_dir));
  if (output && j.contains("output")) *output = get_as<std::string>(j, "output", "compare config");
  return configs;
}

CompareResult compare(const std::vector<ExperimentConfig>& configs, const ExecutionOptions& exec) {
  if (configs.empty()) throw ConfigError("compare: no experiments");
  const ExperimentConfig& first = configs.front();
  for (const ExperimentConfig& c : configs) {
    if (c.instance != first.instance || c.sigma != first.sigma)
      throw ConfigError("compare: mismatched instance specs");
    if (c.horizon != first.horizon || c.runs != first.runs || c.master_seed != first.master_seed ||
        c.checkpoints != first.checkpoints)
      throw ConfigError("compare: T, runs, master_seed and checkpoints must match");
    if (c.p_list != first.p_list) throw ConfigError("compare: p_list must match");
  }
  CompareResult out;
  for (const ExperimentConfig& c : configs) out.results.push_back(run_experiment(c, exec));
  return out;
}

std::string compare_csv(const CompareResult& result) {
  if (result.results.empty()) return {};
  std::string out = "algo," + csv_header(result.results.front().report.p_list) + "\n";
  for (const ExperimentResult& r : result.results)
    for (const RegretPoint& pt : r.report.points) out += r.config.label + "," + csv_row(pt) + "\n";
  return out;
}

}  // namespace fairlin
