#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "samra/config.hpp"
#include "samra/harness.hpp"

using namespace samra;
using namespace samra::harness;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("samra_harness_" + name);
  fs::remove_all(dir);
  return dir;
}

RunConfig tiny(const std::string& name) {
  RunConfig c = parse_config(
      "[scenario]\nnum_platoons = 2\nnum_subchannels = 2\nplatoon_size = 2\n"
      "[learner]\nactor_hidden = 16, 16\nlocal_critic_hidden = 16, 16\n"
      "global_critic_hidden = 16, 16\nbatch_size = 16\nupdate_threshold = 16\n"
      "[run]\nepisodes = 2\neval_episodes = 1\ndeterministic = true\n");
  c.run.output_dir = fresh_dir(name).string();
  return c;
}

}  // namespace

TEST(Harness, MetricColumns) {
  EXPECT_EQ(metric_columns().size(), 8u);
  env::EpisodeMetrics m;
  m.mean_qoe = 1.5;
  m.collisions = 3;
  const auto v = metric_values(m);
  ASSERT_EQ(v.size(), 8u);
  EXPECT_EQ(v[1], 1.5);
  EXPECT_EQ(v[4], 3.0);
}

TEST(Harness, OutputDirResolution) {
  RunConfig c;
  c.run.output_dir = "/tmp/x";
  EXPECT_EQ(resolve_output_dir(c), fs::path("/tmp/x"));
  c.run.output_dir.clear();
  setenv("SAMRA_OUTPUT_ROOT", "/tmp/samra_root_test", 1);
  EXPECT_EQ(resolve_output_dir(c), fs::path("/tmp/samra_root_test"));
  unsetenv("SAMRA_OUTPUT_ROOT");
  EXPECT_EQ(resolve_output_dir(c), fs::path("samra_out"));
}

TEST(Harness, DeterministicRunsAreByteIdentical) {
  auto c = tiny("det_a");
  const auto a = run(c);
  c.run.output_dir = fresh_dir("det_b").string();
  const auto b = run(c);
  EXPECT_EQ(a.files.episodes_csv.filename(), b.files.episodes_csv.filename());
  EXPECT_EQ(slurp(a.files.episodes_csv), slurp(b.files.episodes_csv));
  EXPECT_EQ(slurp(a.files.eval_csv), slurp(b.files.eval_csv));
  auto without_dir = [](std::string text) {
    const auto at = text.find("output_dir = ");
    return text.erase(at, text.find('\n', at) - at);
  };
  EXPECT_EQ(without_dir(slurp(a.files.summary)), without_dir(slurp(b.files.summary)));
  EXPECT_EQ(slurp(a.files.checkpoint), slurp(b.files.checkpoint));
  const std::string name = a.files.episodes_csv.filename().string();
  EXPECT_EQ(name, "run_" + a.config_hash + "_1_episodes.csv");
  EXPECT_NE(slurp(a.files.episodes_csv).find("config_hash=" + a.config_hash), std::string::npos);
  for (const auto& entry : fs::recursive_directory_iterator(c.run.output_dir)) {
    EXPECT_EQ(entry.path().parent_path(), fs::path(c.run.output_dir));
  }
}

TEST(Harness, MetricsFileRoundTrip) {
  auto c = tiny("readback");
  c.run.trace = true;
  const auto out = run(c);
  const auto f = read_metrics_file(out.files.episodes_csv);
  EXPECT_EQ(f.config_hash, out.config_hash);
  EXPECT_EQ(f.scenario_hash, out.scenario_hash);
  EXPECT_EQ(f.algorithm, "SAMRAMARL");
  EXPECT_EQ(f.seed, 1u);
  ASSERT_EQ(f.rows.size(), 2u);
  const auto expected = metric_values(out.training[1]);
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_DOUBLE_EQ(f.rows[1][i], expected[i]);
  ASSERT_FALSE(out.files.trace.empty());
  EXPECT_GT(fs::file_size(out.files.trace), 0u);
}

TEST(Harness, EvalOnlyLeavesCheckpointUntouched) {
  auto c = tiny("evalonly");
  const auto trained = run(c);
  const std::string before = slurp(trained.files.checkpoint);
  const auto mtime = fs::last_write_time(trained.files.checkpoint);
  auto e = c;
  e.run.eval_only = true;
  e.run.checkpoint_in = trained.files.checkpoint.string();
  e.run.eval_episodes = 2;
  const auto evaluated = run(e);
  EXPECT_TRUE(evaluated.training.empty());
  EXPECT_EQ(evaluated.evaluation.size(), 2u);
  EXPECT_TRUE(evaluated.files.checkpoint.empty());
  EXPECT_EQ(slurp(trained.files.checkpoint), before);
  EXPECT_EQ(fs::last_write_time(trained.files.checkpoint), mtime);
  EXPECT_EQ(evaluated.evaluation[0].global_reward, trained.evaluation[0].global_reward);
}

TEST(Harness, SelfCompareIsZero) {
  auto c = tiny("selfcmp");
  std::vector<fs::path> files;
  for (std::uint64_t seed : {1u, 2u}) {
    c.run.seed = seed;
    files.push_back(run(c).files.episodes_csv);
  }
  const auto report = compare_files(files, "SAMRAMARL");
  EXPECT_EQ(report.seeds.size(), 2u);
  for (const auto& line : report.lines) {
    EXPECT_EQ(line.mean_difference, 0.0);
    EXPECT_EQ(line.positive + line.negative, 0);
  }
}

TEST(Harness, CompareRefusesMixedScenarios) {
  auto c = tiny("mixed");
  const auto a = run(c).files.episodes_csv;
  c.run.algorithm = "RANDOM";
  c.env.scenario.platoon_gap_m = 30;
  const auto b = run(c).files.episodes_csv;
  EXPECT_THROW(compare_files({a, b}, "SAMRAMARL"), std::runtime_error);
}

TEST(Harness, CompareAlgorithmsPairsBySeed) {
  auto c = tiny("cmpalg");
  const auto report = compare_algorithms(c, {"SAMRAMARL", "RANDOM"}, {1, 2});
  EXPECT_EQ(report.reference, "SAMRAMARL");
  EXPECT_EQ(report.seeds, (std::vector<std::uint64_t>{1, 2}));
  bool has_random = false;
  for (const auto& l : report.lines) {
    has_random |= l.algorithm == "RANDOM";
    EXPECT_EQ(l.positive + l.negative + l.zero, 2);
  }
  EXPECT_TRUE(has_random);
  EXPECT_FALSE(report.text().empty());
}

TEST(Harness, AggregatesMatchRecomputation) {
  std::vector<SweepRow> raw;
  for (int s = 1; s <= 5; ++s) {
    raw.push_back(SweepRow{"semantic_demand_size", 4000, "TD3", std::to_string(s), "raw",
                           std::vector<double>(8, s * 1.25 + 0.1)});
  }
  const auto agg = aggregate_rows(raw);
  ASSERT_EQ(agg.size(), 2u);
  const double mean = (1 + 2 + 3 + 4 + 5) * 1.25 / 5 + 0.1;
  double var = 0.0;
  for (int s = 1; s <= 5; ++s) var += std::pow(s * 1.25 + 0.1 - mean, 2) / 5;
  EXPECT_EQ(agg[0].row_type, "mean");
  EXPECT_NEAR(agg[0].metrics[0], mean, 1e-12);
  EXPECT_EQ(agg[1].row_type, "std");
  EXPECT_NEAR(agg[1].metrics[0], std::sqrt(var), 1e-12);
}

TEST(Harness, SingleValueSweepMatchesRun) {
  auto c = tiny("sweep1");
  c.sweep.parameter = "semantic_demand_size";
  c.sweep.values = {3000};
  c.sweep.algorithms = {"TD3"};
  c.sweep.seeds_per_point = 1;
  const auto result = sweep(c);
  ASSERT_TRUE(fs::exists(result.csv));
  const SweepRow* mean_row = nullptr;
  for (const auto& r : result.rows)
    if (r.row_type == "mean") mean_row = &r;
  ASSERT_NE(mean_row, nullptr);

  auto single = apply_sweep_value(c, "semantic_demand_size", 3000);
  single.run.algorithm = "TD3";
  single.run.output_dir = fresh_dir("sweep1_run").string();
  const auto direct = run(single);
  const auto expected = mean_metrics(direct.evaluation);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_NEAR(mean_row->metrics[i], expected[i], 1e-12) << metric_columns()[i];
  }
}

TEST(Harness, SweepParameterMapping) {
  RunConfig c;
  auto g = apply_sweep_value(c, "intra_platoon_gap", 15);
  EXPECT_EQ(g.env.scenario.platoon_gap_m, 15.0);
  auto d = apply_sweep_value(c, "semantic_demand_size", 2000);
  EXPECT_EQ(d.env.semantic.payload_min_suts, 2000.0);
  EXPECT_EQ(d.env.semantic.payload_max_suts, 2000.0);
  auto t = apply_sweep_value(c, "transform_factor", 20);
  EXPECT_EQ(t.env.transform_factor_bits, 20.0);
  auto n = apply_sweep_value(c, "noise_or_custom", -100);
  EXPECT_EQ(n.env.scenario.noise_power_dbm, -100.0);
  EXPECT_THROW(apply_sweep_value(c, "intra_platoon_gap", 50), ConfigError);
  EXPECT_THROW(apply_sweep_value(c, "bogus", 1), ConfigError);
}
