// samra: run | sweep | compare | oracle
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "samra/config.hpp"
#include "samra/harness.hpp"
#include "samra/oracle.hpp"
#include "samra/trainer.hpp"

namespace fs = std::filesystem;
using samra::harness::ConfigError;
using samra::harness::RunConfig;

namespace {

constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string algo;
  std::string out;
  bool deterministic = false;
  int episodes = -1;
};

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "Run configuration file (INI)");
  cmd->add_option("--seed", c.seed, "Base seed")->each([&c](const std::string&) { c.seed_set = true; });
  cmd->add_option("--algo", c.algo, "Algorithm id (comma list for sweep/compare)");
  cmd->add_option("--out", c.out, "Output directory");
  cmd->add_flag("--deterministic", c.deterministic, "Omit wall-clock fields from outputs");
  cmd->add_option("--episodes", c.episodes, "Override the learning episode count");
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? samra::harness::parse_config("")
                                        : samra::harness::load_config(c.config_path);
  if (c.seed_set) cfg.run.seed = c.seed;
  if (!c.out.empty()) cfg.run.output_dir = c.out;
  if (c.deterministic) cfg.run.deterministic = true;
  if (c.episodes >= 0) {
    cfg.run.episodes = c.episodes;
    cfg.sweep.episodes_per_point = 0;
  }
  return cfg;
}

void print_metrics(const std::string& label, const std::vector<samra::env::EpisodeMetrics>& eps) {
  if (eps.empty()) return;
  const auto mean = samra::harness::mean_metrics(eps);
  std::cout << label;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    std::cout << ' ' << samra::harness::metric_columns()[i] << '=' << mean[i];
  }
  std::cout << '\n';
}

int cmd_run(const Common& c) {
  RunConfig cfg = resolve(c);
  if (!c.algo.empty()) cfg.run.algorithm = c.algo;
  samra::harness::validate(cfg);
  const auto outcome = samra::harness::run(cfg);
  print_metrics("train", outcome.training);
  print_metrics("eval", outcome.evaluation);
  std::cout << "summary " << outcome.files.summary.string() << '\n';
  return 0;
}

int cmd_sweep(const Common& c, const std::string& param, const std::string& values) {
  RunConfig cfg = resolve(c);
  if (!param.empty()) cfg.sweep.parameter = param;
  if (!values.empty()) samra::harness::set_field(cfg, "sweep.values", values);
  if (!c.algo.empty()) cfg.sweep.algorithms = split_commas(c.algo);
  samra::harness::validate(cfg);
  const auto result = samra::harness::sweep(cfg);
  std::cout << "sweep " << result.csv.string() << " rows=" << result.rows.size() << '\n';
  return 0;
}

int cmd_compare(const Common& c, const std::vector<std::string>& files, std::string reference) {
  if (!files.empty()) {
    std::vector<fs::path> paths(files.begin(), files.end());
    if (reference.empty()) reference = samra::harness::read_metrics_file(paths.front()).algorithm;
    std::cout << samra::harness::compare_files(paths, reference).text();
    return 0;
  }
  RunConfig cfg = resolve(c);
  std::vector<std::string> algos =
      c.algo.empty() ? cfg.sweep.algorithms : split_commas(c.algo);
  if (!reference.empty()) {
    std::erase(algos, reference);
    algos.insert(algos.begin(), reference);
  }
  std::vector<std::uint64_t> seeds;
  for (int s = 0; s < cfg.sweep.seeds_per_point; ++s) seeds.push_back(cfg.run.seed + s);
  std::cout << samra::harness::compare_algorithms(cfg, algos, seeds).text();
  return 0;
}

int cmd_oracle(const Common& c, const std::string& instance_path, int threads) {
  namespace oracle = samra::oracle;
  oracle::StaticInstance inst;
  RunConfig cfg = resolve(c);
  if (!instance_path.empty()) {
    inst = oracle::load_instance(instance_path);
  } else {
    samra::env::Environment env(cfg.env);
    env.reset(cfg.run.seed);
    inst = oracle::freeze_instance(env);
  }
  const auto result = oracle::enumerate_optimum(inst, threads);
  const fs::path dir = samra::harness::resolve_output_dir(cfg);
  fs::create_directories(dir);
  const std::string base = "oracle_" + std::to_string(cfg.run.seed);
  if (instance_path.empty()) oracle::save_instance(dir / (base + "_instance.json"), inst);
  std::ofstream out(dir / (base + "_result.json"));
  out << oracle::to_json(result).dump(1) << '\n';
  std::cout << "objective " << result.breakdown.total << " evaluated " << result.evaluated << '\n';
  std::cout << "result " << (dir / (base + "_result.json")).string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic-aware platoon resource allocation simulator"};
  app.require_subcommand(1);
  Common common;

  auto* run = app.add_subcommand("run", "Train or evaluate one algorithm for one seed");
  add_common(run, common);

  auto* sweep = app.add_subcommand("sweep", "Parameter sweep over algorithms and seeds");
  add_common(sweep, common);
  std::string param;
  std::string values;
  sweep->add_option("--param", param,
                    "intra_platoon_gap | semantic_demand_size | transform_factor | noise_or_custom");
  sweep->add_option("--values", values, "Comma-separated sweep values");

  auto* compare = app.add_subcommand("compare", "Paired per-seed comparison of algorithms");
  add_common(compare, common);
  std::vector<std::string> files;
  std::string reference;
  compare->add_option("files", files, "Existing per-episode metrics files to compare");
  compare->add_option("--reference", reference, "Reference algorithm");

  auto* oracle = app.add_subcommand("oracle", "Exhaustive single-slot optimum of a frozen instance");
  add_common(oracle, common);
  std::string instance_path;
  int threads = 1;
  oracle->add_option("--instance", instance_path, "Instance JSON (default: freeze from config+seed)");
  oracle->add_option("--threads", threads, "Enumeration threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*run) return cmd_run(common);
    if (*sweep) return cmd_sweep(common, param, values);
    if (*compare) return cmd_compare(common, files, reference);
    if (*oracle) return cmd_oracle(common, instance_path, threads);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kConfigError;
}
