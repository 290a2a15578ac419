#include "samra/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "samra/marl.hpp"
#include "samra/trainer.hpp"

namespace samra::harness {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(line);
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

std::vector<double> final_window_means(const std::vector<env::EpisodeMetrics>& episodes) {
  if (episodes.empty()) return std::vector<double>(metric_columns().size(), 0.0);
  const std::size_t window = std::max<std::size_t>(1, episodes.size() / 4);
  return mean_metrics({episodes.end() - static_cast<std::ptrdiff_t>(window), episodes.end()});
}

std::vector<double> run_metrics(const RunOutcome& r) {
  return r.evaluation.empty() ? final_window_means(r.training) : mean_metrics(r.evaluation);
}


}  // namespace

fs::path resolve_output_dir(const RunConfig& config) {
  if (!config.run.output_dir.empty()) return config.run.output_dir;
  if (const char* root = std::getenv("SAMRA_OUTPUT_ROOT"); root != nullptr && *root != '\0') {
    return root;
  }
  return "samra_out";
}

const std::vector<std::string>& metric_columns() {
  static const std::vector<std::string> cols{
      "global_reward",  "mean_qoe",       "srs_hard",        "mean_delay_ms",
      "subchannel_collisions", "threshold_violations", "clipped_actions", "box_repairs"};
  return cols;
}

std::vector<double> metric_values(const env::EpisodeMetrics& m) {
  return {m.global_reward,
          m.mean_qoe,
          m.srs_hard,
          m.mean_delay_ms,
          static_cast<double>(m.collisions),
          static_cast<double>(m.threshold_violations),
          static_cast<double>(m.clipped_actions),
          static_cast<double>(m.box_violations)};
}

std::vector<double> mean_metrics(const std::vector<env::EpisodeMetrics>& episodes) {
  std::vector<double> sum(metric_columns().size(), 0.0);
  for (const auto& e : episodes) {
    const auto v = metric_values(e);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += v[i];
  }
  if (!episodes.empty()) {
    for (double& s : sum) s /= static_cast<double>(episodes.size());
  }
  return sum;
}

std::string episodes_csv(const std::vector<env::EpisodeMetrics>& episodes,
                         const std::string& config_hash, const std::string& scenario_hash,
                         const std::string& algorithm, std::uint64_t seed) {
  std::string out = "# config_hash=" + config_hash + " scenario_hash=" + scenario_hash +
                    " algorithm=" + algorithm + " seed=" + std::to_string(seed) + "\n";
  out += "episode";
  for (const auto& c : metric_columns()) out += "," + c;
  out += "\n";
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    out += std::to_string(e);
    for (double v : metric_values(episodes[e])) out += "," + fmt(v);
    out += "\n";
  }
  return out;
}

MetricsFile read_metrics_file(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  MetricsFile file;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) {
    throw std::runtime_error(path.string() + ": missing '# config_hash=...' header");
  }
  for (const auto& tok : split(line.substr(2), ' ')) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    const std::string k = tok.substr(0, eq);
    const std::string v = tok.substr(eq + 1);
    if (k == "config_hash") file.config_hash = v;
    if (k == "scenario_hash") file.scenario_hash = v;
    if (k == "algorithm") file.algorithm = v;
    if (k == "seed") file.seed = std::stoull(v);
  }
  if (file.config_hash.empty() || file.scenario_hash.empty()) {
    throw std::runtime_error(path.string() + ": header lacks config or scenario hash");
  }
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": missing column header");
  const std::size_t width = metric_columns().size();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != width + 1) throw std::runtime_error(path.string() + ": bad row width");
    std::vector<double> row;
    for (std::size_t i = 1; i < cells.size(); ++i) row.push_back(std::strtod(cells[i].c_str(), nullptr));
    file.rows.push_back(std::move(row));
  }
  return file;
}

RunOutcome run(const RunConfig& config) {
  validate(config);
  const auto algorithm = marl::parse_algorithm(config.run.algorithm);
  const std::string algo_id = marl::to_string(algorithm);
  const std::uint64_t seed = config.run.seed;
  const auto start = std::chrono::steady_clock::now();

  RunOutcome outcome;
  outcome.config_hash = config_hash(config);
  outcome.scenario_hash = scenario_hash(config);
  const fs::path dir = resolve_output_dir(config);
  fs::create_directories(dir);
  const std::string base = "run_" + outcome.config_hash + "_" + std::to_string(seed);
  auto& files = outcome.files;
  files.eval_csv = dir / (base + "_eval.csv");
  files.summary = dir / (base + "_summary.txt");
  files.config = dir / (base + "_config.ini");

  long env_steps = 0;
  try {
    if (config.run.eval_only) {
      env::Environment probe(marl::env_config_for(algorithm, config.env));
      Rng init = Rng::derive(seed, "init");
      auto learner = marl::make_learner(
          algorithm, config.learner,
          marl::Dimensions{probe.num_agents(), probe.observation_dim(), probe.action_dim()}, init);
      std::ifstream in(config.run.checkpoint_in);
      if (!in) throw std::runtime_error("cannot read checkpoint " + config.run.checkpoint_in);
      Rng restored;
      marl::load_checkpoint(in, *learner, restored);
      outcome.evaluation =
          marl::evaluate_policy(*learner, config.env, seed, config.run.eval_episodes);
    } else {
      std::ofstream trace;
      marl::TrainOptions options;
      options.episodes = config.run.episodes;
      options.eval_episodes = config.run.eval_episodes;
      if (config.run.trace) {
        files.trace = dir / (base + "_trace.ndjson");
        trace.open(files.trace, std::ios::binary);
        if (!trace) throw std::runtime_error("cannot write " + files.trace.string());
        options.trace = &trace;
      }
      auto result = marl::train(algorithm, config.env, config.learner, seed, options);
      outcome.training = std::move(result.training);
      outcome.evaluation = std::move(result.evaluation);
      env_steps = result.env_steps;
      files.episodes_csv = dir / (base + "_episodes.csv");
      write_file(files.episodes_csv, episodes_csv(outcome.training, outcome.config_hash,
                                                  outcome.scenario_hash, algo_id, seed));
      if (config.run.save_checkpoint) {
        files.checkpoint = dir / (base + ".ckpt");
        std::ostringstream ckpt;
        marl::save_checkpoint(ckpt, *result.learner, result.exploration_rng);
        write_file(files.checkpoint, ckpt.str());
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw std::runtime_error("run " + algo_id + " seed " + std::to_string(seed) + ": " + e.what());
  }

  write_file(files.eval_csv, episodes_csv(outcome.evaluation, outcome.config_hash,
                                          outcome.scenario_hash, algo_id, seed));
  write_file(files.config, emit_config(config));

  std::string summary = "# samra run summary\n";
  summary += "algorithm = " + algo_id + "\n";
  summary += "seed = " + std::to_string(seed) + "\n";
  summary += "config_hash = " + outcome.config_hash + "\n";
  summary += "scenario_hash = " + outcome.scenario_hash + "\n";
  summary += "mode = " + std::string(config.run.eval_only ? "evaluate" : "train") + "\n";
  summary += "training_episodes = " + std::to_string(outcome.training.size()) + "\n";
  summary += "eval_episodes = " + std::to_string(outcome.evaluation.size()) + "\n";
  summary += "env_steps = " + std::to_string(env_steps) + "\n";
  const auto train_final = final_window_means(outcome.training);
  const auto eval_mean = mean_metrics(outcome.evaluation);
  for (std::size_t i = 0; i < metric_columns().size(); ++i) {
    summary += "train_final." + metric_columns()[i] + " = " + fmt(train_final[i]) + "\n";
  }
  for (std::size_t i = 0; i < metric_columns().size(); ++i) {
    summary += "eval." + metric_columns()[i] + " = " + fmt(eval_mean[i]) + "\n";
  }
  if (!config.run.deterministic) {
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    summary += "wall_time_s = " + fmt(wall) + "\n";
  }
  summary += "\n# resolved config\n" + emit_config(config);
  write_file(files.summary, summary);
  return outcome;
}

const std::vector<std::string>& sweep_parameters() {
  static const std::vector<std::string> params{"intra_platoon_gap", "semantic_demand_size",
                                               "transform_factor", "noise_or_custom"};
  return params;
}

RunConfig apply_sweep_value(RunConfig config, const std::string& parameter, double value) {
  if (parameter == "intra_platoon_gap") {
    set_field(config, "scenario.platoon_gap", fmt(value));
  } else if (parameter == "semantic_demand_size") {
    set_field(config, "semantic.payload_min_suts", fmt(value));
    set_field(config, "semantic.payload_max_suts", fmt(value));
  } else if (parameter == "transform_factor") {
    // Bits/word for the no-semantics baseline, u_max for the semantic learners.
    set_field(config, "env.transform_factor_bits", fmt(value));
    const std::string u = std::to_string(std::max(1L, std::lround(value)));
    set_field(config, "semantic.u_max_text", u);
    set_field(config, "semantic.u_max_image", u);
  } else if (parameter == "noise_or_custom") {
    set_field(config, config.sweep.custom_key, fmt(value));
  } else {
    throw ConfigError("sweep.parameter", "unsupported sweep parameter '" + parameter +
                                             "' (expected intra_platoon_gap, semantic_demand_size, "
                                             "transform_factor or noise_or_custom)");
  }
  validate(config);
  return config;
}

std::vector<SweepRow> aggregate_rows(const std::vector<SweepRow>& raw) {
  std::vector<SweepRow> out;
  std::vector<std::pair<double, std::string>> keys;
  for (const auto& r : raw) {
    if (r.row_type != "raw") continue;
    const auto key = std::make_pair(r.value, r.algorithm);
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }
  for (const auto& [value, algo] : keys) {
    std::vector<const SweepRow*> group;
    for (const auto& r : raw) {
      if (r.row_type == "raw" && r.value == value && r.algorithm == algo) group.push_back(&r);
    }
    const std::size_t width = group.front()->metrics.size();
    SweepRow mean{group.front()->parameter, value, algo, "mean", "mean",
                  std::vector<double>(width, 0.0)};
    for (const auto* r : group) {
      for (std::size_t i = 0; i < width; ++i) mean.metrics[i] += r->metrics[i];
    }
    for (double& m : mean.metrics) m /= static_cast<double>(group.size());
    SweepRow sd{mean.parameter, value, algo, "std", "std", std::vector<double>(width, 0.0)};
    for (const auto* r : group) {
      for (std::size_t i = 0; i < width; ++i) {
        const double d = r->metrics[i] - mean.metrics[i];
        sd.metrics[i] += d * d;
      }
    }
    for (double& s : sd.metrics) s = std::sqrt(s / static_cast<double>(group.size()));
    out.push_back(std::move(mean));
    out.push_back(std::move(sd));
  }
  return out;
}

std::string sweep_csv(const std::vector<SweepRow>& rows, const std::string& config_hash) {
  std::string out = "# config_hash=" + config_hash + "\n";
  out += "parameter,value,algorithm,seed,row_type";
  for (const auto& c : metric_columns()) out += "," + c;
  out += "\n";
  for (const auto& r : rows) {
    out += r.parameter + "," + fmt(r.value) + "," + r.algorithm + "," + r.seed + "," + r.row_type;
    for (double v : r.metrics) out += "," + fmt(v);
    out += "\n";
  }
  return out;
}

SweepResult sweep(const RunConfig& config) {
  validate(config);
  const auto& spec = config.sweep;
  const auto& params = sweep_parameters();
  if (std::find(params.begin(), params.end(), spec.parameter) == params.end()) {
    apply_sweep_value(config, spec.parameter, 0.0);  // throws the diagnostic
  }
  if (spec.values.empty()) throw ConfigError("sweep.values", "needs at least one value");
  if (spec.algorithms.empty()) throw ConfigError("sweep.algorithms", "needs at least one algorithm");

  struct Task {
    RunConfig cfg;
    SweepRow row;
  };
  std::vector<Task> tasks;
  for (double value : spec.values) {
    const RunConfig point = apply_sweep_value(config, spec.parameter, value);
    for (const auto& algo : spec.algorithms) {
      for (int s = 0; s < spec.seeds_per_point; ++s) {
        Task t{point, {}};
        t.cfg.run.algorithm = marl::to_string(marl::parse_algorithm(algo));
        t.cfg.run.seed = config.run.seed + static_cast<std::uint64_t>(s);
        if (spec.episodes_per_point > 0) t.cfg.run.episodes = spec.episodes_per_point;
        t.row = SweepRow{spec.parameter, value, t.cfg.run.algorithm,
                         std::to_string(t.cfg.run.seed), "raw", {}};
        tasks.push_back(std::move(t));
      }
    }
  }

  // Tasks are independent; results land in their own slot so order never matters.
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        tasks[i].row.metrics = run_metrics(run(tasks[i].cfg));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(spec.jobs, static_cast<int>(tasks.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  std::vector<SweepRow> raw;
  for (auto& t : tasks) raw.push_back(std::move(t.row));
  const auto aggregates = aggregate_rows(raw);

  SweepResult result;
  // Group raw rows with their aggregates per (value, algorithm).
  for (std::size_t g = 0; g < aggregates.size(); g += 2) {
    for (const auto& r : raw) {
      if (r.value == aggregates[g].value && r.algorithm == aggregates[g].algorithm) {
        result.rows.push_back(r);
      }
    }
    result.rows.push_back(aggregates[g]);
    result.rows.push_back(aggregates[g + 1]);
  }
  const std::string hash = config_hash(config);
  const fs::path dir = resolve_output_dir(config);
  fs::create_directories(dir);
  result.csv = dir / ("sweep_" + hash + "_" + spec.parameter + ".csv");
  write_file(result.csv, sweep_csv(result.rows, hash));
  return result;
}

std::string CompareReport::text() const {
  std::string out = "# compare reference=" + reference + " scenario_hash=" + scenario_hash + " seeds=";
  for (std::size_t i = 0; i < seeds.size(); ++i) out += (i ? ";" : "") + std::to_string(seeds[i]);
  out += "\nalgorithm,metric,mean_difference,positive,negative,zero\n";
  for (const auto& l : lines) {
    out += l.algorithm + "," + l.metric + "," + fmt(l.mean_difference) + "," +
           std::to_string(l.positive) + "," + std::to_string(l.negative) + "," +
           std::to_string(l.zero) + "\n";
  }
  return out;
}

CompareReport compare_files(const std::vector<fs::path>& files, const std::string& reference) {
  if (files.empty()) throw std::runtime_error("compare: no metrics files given");
  std::vector<std::string> order;
  std::map<std::string, std::map<std::uint64_t, std::vector<double>>> by_algo;
  std::string scenario;
  for (const auto& path : files) {
    const MetricsFile f = read_metrics_file(path);
    if (scenario.empty()) scenario = f.scenario_hash;
    if (f.scenario_hash != scenario) {
      throw std::runtime_error("compare: " + path.string() + " has scenario hash " +
                               f.scenario_hash + ", expected " + scenario);
    }
    if (f.rows.empty()) throw std::runtime_error("compare: " + path.string() + " has no rows");
    std::vector<double> mean(metric_columns().size(), 0.0);
    for (const auto& row : f.rows) {
      for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += row[i];
    }
    for (double& m : mean) m /= static_cast<double>(f.rows.size());
    if (!by_algo.count(f.algorithm)) order.push_back(f.algorithm);
    if (!by_algo[f.algorithm].emplace(f.seed, mean).second) {
      throw std::runtime_error("compare: duplicate " + f.algorithm + " seed " + std::to_string(f.seed));
    }
  }
  const std::string ref = marl::to_string(marl::parse_algorithm(reference));
  if (!by_algo.count(ref)) throw std::runtime_error("compare: no files for reference " + ref);
  CompareReport report;
  report.reference = ref;
  report.scenario_hash = scenario;
  for (const auto& [seed, m] : by_algo[ref]) report.seeds.push_back(seed);
  for (const auto& algo : order) {
    const auto& runs = by_algo[algo];
    std::vector<std::uint64_t> seeds;
    for (const auto& [seed, m] : runs) seeds.push_back(seed);
    if (seeds != report.seeds) {
      throw std::runtime_error("compare: " + algo + " does not share the reference seed set");
    }
    for (std::size_t i = 0; i < metric_columns().size(); ++i) {
      CompareLine line{algo, metric_columns()[i], 0.0, 0, 0, 0};
      for (std::uint64_t seed : seeds) {
        const double d = runs.at(seed)[i] - by_algo[ref].at(seed)[i];
        line.mean_difference += d;
        if (d > 0.0) ++line.positive;
        else if (d < 0.0) ++line.negative;
        else ++line.zero;
      }
      line.mean_difference /= static_cast<double>(seeds.size());
      report.lines.push_back(line);
    }
  }
  return report;
}

CompareReport compare_algorithms(const RunConfig& config, const std::vector<std::string>& algorithms,
                                 const std::vector<std::uint64_t>& seeds) {
  if (algorithms.size() < 2) throw ConfigError("run.algorithm", "compare needs at least two algorithms");
  if (seeds.empty()) throw ConfigError("run.seed", "compare needs at least one seed");
  std::vector<fs::path> files;
  for (const auto& algo : algorithms) {
    for (std::uint64_t seed : seeds) {
      RunConfig cfg = config;
      cfg.run.algorithm = marl::to_string(marl::parse_algorithm(algo));
      cfg.run.seed = seed;
      const RunOutcome r = run(cfg);
      files.push_back(cfg.run.eval_episodes > 0 ? r.files.eval_csv : r.files.episodes_csv);
    }
  }
  CompareReport report = compare_files(files, algorithms.front());
  const fs::path dir = resolve_output_dir(config);
  write_file(dir / ("compare_" + report.scenario_hash + ".csv"), report.text());
  return report;
}

}  // namespace samra::harness
