// fairlin: run fairness-aware linear bandit experiments.
//
//   fairlin run --config exp.json [--out dir]
//   fairlin compare --config compare.json [--out file.csv]
//   fairlin design --instance inst.json [--eps 0.01]
//   fairlin geometry --instance inst.json [--n-dirs N]
//
// Exit codes: 0 success, 2 configuration errors, 3 runtime failures.

#include "fairlin/design.hpp"
#include "fairlin/geometry.hpp"
#include "fairlin/harness.hpp"
#include "fairlin/instances.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <fstream>
#include <iostream>

namespace {

using nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

fairlin::BanditInstance read_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw fairlin::ConfigError("cannot read instance file " + path);
  try {
    return fairlin::instance_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw fairlin::ConfigError("instance file " + path + ": " + e.what());
  } catch (const fairlin::InvalidInstance& e) {
    throw fairlin::ConfigError("instance file " + path + ": " + e.what());
  }
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw fairlin::ConfigError("cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw fairlin::ConfigError(path + ": " + e.what());
  }
}

void cmd_run(const std::string& config_path, const std::string& out_dir) {
  fairlin::ExperimentConfig config = fairlin::load_config(config_path);
  const std::string dir = out_dir.empty() ? config.output : out_dir;
  const fairlin::ExperimentResult result = fairlin::run_experiment(config);
  if (dir.empty()) {
    std::cout << fairlin::regret_csv(result.report);
    return;
  }
  fairlin::write_outputs(result, dir);
  std::cerr << "wrote " << dir << "/regret.csv, runs.json, timing.json\n";
}

void cmd_compare(const std::string& config_path, const std::string& out_file) {
  std::string output;
  const auto configs = fairlin::parse_compare_config(
      load_json(config_path), std::filesystem::path(config_path).parent_path(), &output);
  if (!out_file.empty()) output = out_file;
  const std::string csv = fairlin::compare_csv(fairlin::compare(configs));
  if (output.empty()) {
    std::cout << csv;
    return;
  }
  std::ofstream out(output, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + output + " for writing");
  out << csv;
}

void cmd_design(const std::string& instance_path, double eps) {
  const fairlin::BanditInstance inst = read_instance(instance_path);
  fairlin::DesignOptions opts;
  opts.eps = eps;
  const fairlin::DesignWeights w = fairlin::d_optimal_design(inst.arms(), opts);
  json support = json::array();
  for (int i : w.support()) support.push_back({{"arm", i}, {"weight", w.weights[i]}});
  const json out{{"weights", w.weights},      {"support", support},
                 {"g_value", w.g_value},      {"support_size", w.support_size()},
                 {"iterations", w.iterations_used}, {"converged", w.converged}};
  std::cout << out.dump(2) << "\n";
}

void cmd_geometry(const std::string& instance_path, int n_dirs) {
  const fairlin::BanditInstance inst = read_instance(instance_path);
  const fairlin::JohnDistribution john = fairlin::john_distribution(inst.arms(), n_dirs);
  json rho = json::array();
  for (int i : john.support()) rho.push_back({{"arm", i}, {"weight", john.rho[i]}});
  const double ratio = fairlin::welfare_floor_check(john, inst);
  const json out{{"c", std::vector<double>(john.center.data(), john.center.data() + john.center.size())},
                 {"r", john.radius},
                 {"rho", rho},
                 {"floor_ratio", std::isfinite(ratio) ? json(ratio) : json("inf")}};
  std::cout << out.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness-aware linear bandit experiments"};
  app.require_subcommand(1);

  std::string config_path, out_path, instance_path;
  double eps = 0.01;
  int n_dirs = 0;

  auto* run = app.add_subcommand("run", "Run one experiment and write regret curves");
  run->add_option("--config", config_path, "Experiment config JSON")->required();
  run->add_option("--out", out_path, "Output directory (overrides the config's output)");

  auto* cmp = app.add_subcommand("compare", "Run several algorithms on one instance");
  cmp->add_option("--config", config_path, "Compare config JSON")->required();
  cmp->add_option("--out", out_path, "Output CSV file");

  auto* design = app.add_subcommand("design", "Print the D-optimal design of an instance");
  design->add_option("--instance", instance_path, "Instance JSON")->required();
  design->add_option("--eps", eps, "Frank-Wolfe tolerance")->check(CLI::PositiveNumber);

  auto* geometry = app.add_subcommand("geometry", "Print the Chebyshev center and John distribution");
  geometry->add_option("--instance", instance_path, "Instance JSON")->required();
  geometry->add_option("--n-dirs", n_dirs, "Probe directions (default max(50, 10 d))");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) cmd_run(config_path, out_path);
    if (*cmp) cmd_compare(config_path, out_path);
    if (*design) cmd_design(instance_path, eps);
    if (*geometry) cmd_geometry(instance_path, n_dirs);
  } catch (const fairlin::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
