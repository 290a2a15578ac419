#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "samra/channel.hpp"
#include "samra/env.hpp"
#include "samra/semantics.hpp"

namespace samra::oracle {

enum class ThresholdRule { kArgmax, kHalf };

/// One frozen slot of problem P1 with its decision grids.
struct StaticInstance {
  channel::ChannelRealization channel;  // tx = platoon leaders, rx = vehicles then BS
  int num_agents = 1;
  int num_subchannels = 1;
  std::vector<std::vector<int>> platoons;  // vehicle indices, leader first
  std::vector<std::vector<semantics::QoEProfile>> profiles;
  double payload_suts = 0.0;
  semantics::SemanticConfig semantic;
  semantics::AnalyticSimilarity similarity;
  std::optional<semantics::SimilarityGrid> similarity_grid;  // replaces the analytic form
  bool semantic_aware = true;
  double transform_factor_bits = 40.0;
  bool gate_delivery_on_similarity = false;
  double qoe_threshold = 0.5;
  double max_power_w = 1.0;

  std::vector<double> power_levels;  // shared text/image grid
  std::vector<int> u_text_levels;
  std::vector<int> u_image_levels;
  std::uint64_t enumeration_cap = 10'000'000;

  [[nodiscard]] int members() const { return static_cast<int>(platoons.front().size()) - 1; }
  [[nodiscard]] env::ActionLayout layout() const;
  /// Throws std::invalid_argument on empty/non-finite grids or bad shapes.
  void validate() const;
};

/// Flags per constraint of P1 (b..i).
struct ConstraintFlags {
  bool binary_assignment = false;    // b
  bool shared_subchannel = false;    // c
  bool multiple_subchannels = false;  // d
  bool text_symbol_bounds = false;   // e
  bool image_symbol_bounds = false;  // f
  bool power_box = false;            // g
  bool score_threshold = false;      // h
  bool payload_bound = false;        // i
  [[nodiscard]] bool any() const;
  friend bool operator==(const ConstraintFlags&, const ConstraintFlags&) = default;
};

struct ObjectiveBreakdown {
  double total = 0.0;
  double lambda = 1.0;
  std::vector<double> platoon_qoe;
  std::vector<double> platoon_logistic;
  ConstraintFlags violations;
  [[nodiscard]] double qoe_sum() const;
  [[nodiscard]] double logistic_sum() const;
  [[nodiscard]] double recompute() const { return qoe_sum() + lambda * logistic_sum(); }
};

using Assignment = std::vector<env::AgentAction>;

/// Builds the instance of the environment's current slot with default grids.
StaticInstance freeze_instance(const env::Environment& environment);
/// Default grids: powers {0, p/3, 2p/3, p}, u in {5, 10, 20, 30} capped at u_max.
void apply_default_grids(StaticInstance& instance);

/// Throws std::invalid_argument when a value is off-grid or shapes mismatch.
ObjectiveBreakdown evaluate_objective(const StaticInstance& instance, const Assignment& assignment);

/// Size of the canonical joint space enumerate_optimum walks.
std::uint64_t joint_space_size(const StaticInstance& instance);
/// Every canonical per-agent option, in enumeration order.
std::vector<env::AgentAction> agent_options(const StaticInstance& instance);

struct OracleResult {
  Assignment assignment;
  ObjectiveBreakdown breakdown;
  std::uint64_t evaluated = 0;
};

/// Exhaustive search; first maximiser in lexicographic order wins ties.
/// Throws std::length_error when the joint space exceeds the cap.
OracleResult enumerate_optimum(const StaticInstance& instance, int threads = 1);

/// Uniform draw from the canonical joint space.
Assignment random_assignment(const StaticInstance& instance, Rng& rng);

/// Fractional-beta objective: each platoon's value is the beta-weighted mean
/// of its per-subchannel values with interference bilinear in beta.
double relaxed_objective(const StaticInstance& instance, const Assignment& assignment,
                         const std::vector<std::vector<double>>& beta);
std::vector<int> threshold_beta(const std::vector<std::vector<double>>& beta, ThresholdRule rule);

struct RelaxationReport {
  double relaxed = 0.0;
  double thresholded = 0.0;
  double gap = 0.0;  // relaxed - thresholded
  std::vector<int> subchannels;
};

/// The subchannel fields of `assignment` are replaced by the thresholded beta.
RelaxationReport relaxation_gap(const StaticInstance& instance, const Assignment& assignment,
                                const std::vector<std::vector<double>>& beta,
                                ThresholdRule rule = ThresholdRule::kArgmax);

nlohmann::json to_json(const StaticInstance& instance);
StaticInstance instance_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Assignment& assignment);
Assignment assignment_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ObjectiveBreakdown& breakdown);
nlohmann::json to_json(const OracleResult& result);

void save_instance(const std::filesystem::path& path, const StaticInstance& instance);
StaticInstance load_instance(const std::filesystem::path& path);

}  // namespace samra::oracle
