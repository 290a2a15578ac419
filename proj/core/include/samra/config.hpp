#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "samra/env.hpp"
#include "samra/marl.hpp"

namespace samra::harness {

/// Parse/validation failure; `key` is the section.key path when known.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  [[nodiscard]] const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct SweepSpec {
  std::string parameter = "semantic_demand_size";
  std::vector<double> values;
  std::vector<std::string> algorithms{"SAMRAMARL", "DDPG", "TD3", "DDPG_NO_SC"};
  int episodes_per_point = 0;  // 0 uses run.episodes
  int seeds_per_point = 5;
  /// Numeric key swept by the noise_or_custom parameter.
  std::string custom_key = "scenario.noise_power_dbm";
  int jobs = 1;
};

struct RunSpec {
  std::string algorithm = "SAMRAMARL";
  std::uint64_t seed = 1;
  int episodes = 500;
  int eval_episodes = 10;
  std::string output_dir;  // empty: $SAMRA_OUTPUT_ROOT or ./samra_out
  bool deterministic = false;
  bool trace = false;
  bool save_checkpoint = true;
  std::string checkpoint_in;  // evaluation-only when set together with eval_only
  bool eval_only = false;
};

struct RunConfig {
  env::EnvConfig env;
  marl::LearnerConfig learner;
  SweepSpec sweep;
  RunSpec run;
};

/// Where a default value comes from.
enum class Source { kTable1, kTable2, kLedger };

struct FieldInfo {
  std::string section;
  std::string key;
  Source source;
};

[[nodiscard]] const std::vector<FieldInfo>& config_fields();

/// INI-style text: [section] headers, key = value lines, ';' or '#' comments.
/// Keys before any section resolve by unique name. Unknown keys, bad types and
/// out-of-range values throw ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical resolved text; parse_config(emit_config(c)) == c field by field.
std::string emit_config(const RunConfig& config);
/// Sets one field from text, e.g. set_field(c, "scenario.platoon_gap", "15").
void set_field(RunConfig& config, const std::string& path, const std::string& value);
[[nodiscard]] std::string get_field(const RunConfig& config, const std::string& path);

/// Hash of everything that shapes results except seed and output location.
[[nodiscard]] std::string config_hash(const RunConfig& config);
/// Hash of the scenario/semantic/env sections and episode counts only.
[[nodiscard]] std::string scenario_hash(const RunConfig& config);

/// Checks cross-field constraints; throws ConfigError.
void validate(const RunConfig& config);

}  // namespace samra::harness
