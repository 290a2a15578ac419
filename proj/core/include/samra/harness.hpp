#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "samra/config.hpp"
#include "samra/env.hpp"

namespace samra::harness {

/// Output root: explicit dir, else $SAMRA_OUTPUT_ROOT, else ./samra_out.
std::filesystem::path resolve_output_dir(const RunConfig& config);

/// Metric columns shared by the per-episode and sweep files.
const std::vector<std::string>& metric_columns();
std::vector<double> metric_values(const env::EpisodeMetrics& m);
/// Column-wise mean of per-episode metric rows.
std::vector<double> mean_metrics(const std::vector<env::EpisodeMetrics>& episodes);

struct RunFiles {
  std::filesystem::path episodes_csv;
  std::filesystem::path eval_csv;
  std::filesystem::path summary;
  std::filesystem::path config;
  std::filesystem::path checkpoint;  // empty when not written
  std::filesystem::path trace;       // empty when not written
};

struct RunOutcome {
  RunFiles files;
  std::vector<env::EpisodeMetrics> training;
  std::vector<env::EpisodeMetrics> evaluation;
  std::string config_hash;
  std::string scenario_hash;
};

/// Train (or evaluate a checkpoint) for config.run.seed and write the run files.
RunOutcome run(const RunConfig& config);

/// Sweep parameters understood by sweep().
const std::vector<std::string>& sweep_parameters();
/// Applies one sweep value to a config copy; throws ConfigError on unknown names.
RunConfig apply_sweep_value(RunConfig config, const std::string& parameter, double value);

struct SweepRow {
  std::string parameter;
  double value = 0.0;
  std::string algorithm;
  std::string seed;      // numeric, or "mean"/"std" on aggregate rows
  std::string row_type;  // raw | mean | std
  std::vector<double> metrics;
};

struct SweepResult {
  std::filesystem::path csv;
  std::vector<SweepRow> rows;
};

/// One run per (value, algorithm, seed) plus mean/std rows per (value, algorithm).
/// Per-run metrics are the evaluation means, or the final-quarter training
/// means when no evaluation episodes are configured.
SweepResult sweep(const RunConfig& config);

/// Mean and population std over raw rows; recomputable from them.
std::vector<SweepRow> aggregate_rows(const std::vector<SweepRow>& raw);
std::string sweep_csv(const std::vector<SweepRow>& rows, const std::string& config_hash);

/// Per-episode metrics read back from a run file.
struct MetricsFile {
  std::string config_hash;
  std::string scenario_hash;
  std::string algorithm;
  std::uint64_t seed = 0;
  std::vector<std::vector<double>> rows;
};

std::string episodes_csv(const std::vector<env::EpisodeMetrics>& episodes,
                         const std::string& config_hash, const std::string& scenario_hash,
                         const std::string& algorithm, std::uint64_t seed);
MetricsFile read_metrics_file(const std::filesystem::path& path);

struct CompareLine {
  std::string algorithm;
  std::string metric;
  double mean_difference = 0.0;  // algorithm minus reference
  int positive = 0;
  int negative = 0;
  int zero = 0;
};

struct CompareReport {
  std::string reference;
  std::string scenario_hash;
  std::vector<std::uint64_t> seeds;
  std::vector<CompareLine> lines;
  [[nodiscard]] std::string text() const;
};

/// Paired per-seed differences against `reference` using per-file metric means.
/// Throws std::runtime_error when files come from different scenarios or the
/// algorithms do not share the same seed set.
CompareReport compare_files(const std::vector<std::filesystem::path>& files,
                            const std::string& reference);

/// Runs every algorithm for each seed and compares against the first.
CompareReport compare_algorithms(const RunConfig& config, const std::vector<std::string>& algorithms,
                                 const std::vector<std::uint64_t>& seeds);

}  // namespace samra::harness
