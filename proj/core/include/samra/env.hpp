#pragma once

#include <cstdint>
#include <memory>
#include <ostream>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "samra/channel.hpp"
#include "samra/channel_model.hpp"
#include "samra/rng.hpp"
#include "samra/semantics.hpp"

namespace samra::env {

/// Distributions the per-episode QoE profiles are drawn from.
struct ProfileDistribution {
  double rate_weight_min = 0.0;
  double rate_weight_max = 1.0;
  double similarity_target_min = 0.8;
  double similarity_target_max = 0.9;
  double text_rate_target_min_ksuts = 50.0;
  double text_rate_target_max_ksuts = 70.0;
  double image_rate_target_min_ksuts = 80.0;
  double image_rate_target_max_ksuts = 100.0;
  double rate_slope_mean = 0.1;
  double rate_slope_std = 0.02;
  double similarity_slope_mean = 55.0;
  double similarity_slope_std = 2.5;
};

/// Fixed affine maps applied to observation components.
struct ObservationScaling {
  double gain_offset_db = 50.0;        // subtracted from 10log10(h / sigma^2)
  double gain_scale_db = 30.0;
  double interference_scale_db = 30.0;  // divides 10log10((I + sigma^2) / sigma^2)
  double payload_scale_suts = 6000.0;
};

struct EnvConfig {
  channel::ScenarioConfig scenario;
  semantics::SemanticConfig semantic;
  semantics::AnalyticSimilarity similarity;
  /// Optional grid table replacing the analytic surrogate.
  std::string similarity_table_path;
  ProfileDistribution profiles;
  ObservationScaling scaling;

  /// false selects the no-semantics baseline: rates use the bit transform
  /// factor, u actions are ignored, and QoE is the rate-only QoE'.
  bool semantic_aware = true;
  double transform_factor_bits = 40.0;
  /// true uses a negative SRS term in the local reward.
  bool negative_srs_reward = false;
  /// Deliver a member's stream only when its similarity meets its target.
  bool gate_delivery_on_similarity = false;
  double qoe_threshold = 0.5;  // G_th, audited only

  [[nodiscard]] int slots_per_episode() const;
  /// Throws ConfigError-like std::invalid_argument with the offending field.
  void validate() const;
};

enum class StreamRole { kSingleText, kPairText, kPairImage };

struct PairingPlan {
  std::vector<std::pair<int, int>> pairs;  // member indices
  std::optional<int> single;               // unpaired member, last in order
  [[nodiscard]] std::vector<StreamRole> roles(int member_count) const;
  [[nodiscard]] bool has_image_stream() const { return !pairs.empty(); }
};

/// Even member counts pair everyone; odd counts leave the last member on
/// single-modal text.
PairingPlan pair_members(int member_count);

struct ActionLayout {
  int num_subchannels = 4;
  int members = 4;  // platoon size - 1
  double max_power_w = 1.0;
  int u_max_text = 30;
  int u_max_image = 30;
  bool has_image_stream = true;

  [[nodiscard]] int dimension() const { return num_subchannels + 1 + 2 + 2 * members; }
};

/// One platoon leader's decoded decision.
struct AgentAction {
  int subchannel = 0;
  bool v2v = true;
  double text_power_w = 0.0;
  double image_power_w = 0.0;
  std::vector<int> u_text;   // per member
  std::vector<int> u_image;  // per member

  friend bool operator==(const AgentAction&, const AgentAction&) = default;
};

struct DecodedAction {
  AgentAction action;
  int clipped_entries = 0;  // raw entries outside [-1, 1]
};

/// Maps an actor output in [-1,1]^d onto the action space. Throws
/// std::invalid_argument on a dimension mismatch.
DecodedAction decode_action(std::span<const double> raw, const ActionLayout& layout);

/// Forces an action into the feasible box; returns the number of repairs.
int sanitize_action(AgentAction& action, const ActionLayout& layout);

/// u used by the leader's V2I text stream.
int v2i_symbol_length(const AgentAction& action, const ActionLayout& layout);

struct PlatoonOutcome {
  int subchannel = 0;
  bool v2v = true;
  std::vector<double> sinr_text;   // per member
  std::vector<double> sinr_image;  // per member
  double sinr_bs = 0.0;
  /// Per vehicle, leader first.
  std::vector<semantics::ServiceLevel> service;
  double delivered_rate = 0.0;  // V2V payload rate, suts/s after time sharing
  double qoe = 0.0;
  double srs_logistic = 0.0;
  double local_reward = 0.0;
  int threshold_violations = 0;  // vehicles with a score below G_th
};

struct SlotOutcome {
  std::vector<PlatoonOutcome> platoons;
  int collisions = 0;  // extra platoons sharing a subchannel
  double global_reward = 0.0;

  /// Sum of QoE plus lambda times the sum of logistic delivery terms.
  [[nodiscard]] double objective(double lambda) const;
};

/// First slot (in ms) at which the cumulative delivery reaches the payload,
/// or the window length if it never does.
double measure_delay(std::span<const double> delivered_per_slot, double payload,
                     double slot_ms, double window_ms);

struct EpisodeMetrics {
  double global_reward = 0.0;  // mean over slots
  double mean_qoe = 0.0;       // mean per-platoon QoE over slots
  double srs_hard = 0.0;       // fraction of platoons that delivered B_s
  double mean_delay_ms = 0.0;
  std::int64_t collisions = 0;
  std::int64_t threshold_violations = 0;
  std::int64_t clipped_actions = 0;
  std::int64_t box_violations = 0;  // repairs of u/power/subchannel bounds
};

struct StepResult {
  std::vector<std::vector<double>> observations;
  std::vector<double> local_rewards;
  double global_reward = 0.0;
  bool done = false;
  SlotOutcome outcome;
  int repaired = 0;
};

/// Multi-agent platooning environment; one agent per platoon leader.
class Environment {
 public:
  explicit Environment(EnvConfig config);

  std::vector<std::vector<double>> reset(std::uint64_t seed);
  StepResult step(std::vector<AgentAction> actions);
  /// Decodes raw actor outputs for every agent and steps.
  StepResult step_raw(const std::vector<std::vector<double>>& raw_actions);

  /// Single-slot evaluation on the current channel without advancing state.
  [[nodiscard]] SlotOutcome evaluate_slot(std::vector<AgentAction> actions) const;

  [[nodiscard]] std::vector<std::vector<double>> observations() const;
  [[nodiscard]] EpisodeMetrics episode_metrics() const;

  [[nodiscard]] int num_agents() const { return config_.scenario.num_platoons; }
  [[nodiscard]] int observation_dim() const;
  [[nodiscard]] int action_dim() const { return layout_.dimension(); }
  [[nodiscard]] const ActionLayout& layout() const { return layout_; }
  [[nodiscard]] const EnvConfig& config() const { return config_; }
  [[nodiscard]] const channel::TopologyState& topology() const { return topology_; }
  [[nodiscard]] const channel::ChannelRealization& channel() const;
  [[nodiscard]] const std::vector<std::vector<semantics::QoEProfile>>& profiles() const {
    return profiles_;
  }
  [[nodiscard]] const std::vector<StreamRole>& member_roles() const { return roles_; }
  [[nodiscard]] double payload_suts() const { return payload_; }
  [[nodiscard]] const std::vector<double>& residual_payload() const { return residual_; }
  [[nodiscard]] const semantics::SimilaritySurrogate& surrogate() const { return surrogate_; }
  [[nodiscard]] int slot() const { return slot_; }

  /// Newline-delimited JSON records per slot and agent; nullptr disables.
  void set_trace_sink(std::ostream* sink) { trace_ = sink; }

 private:
  SlotOutcome compute_slot(std::vector<AgentAction>& actions, int* repaired) const;
  void record_interference(const std::vector<AgentAction>& actions);
  void emit_trace(const std::vector<AgentAction>& actions, const SlotOutcome& outcome) const;

  EnvConfig config_;
  ActionLayout layout_;
  PairingPlan pairing_;
  std::vector<StreamRole> roles_;
  semantics::SimilaritySurrogate surrogate_;

  channel::TopologyState topology_;
  std::unique_ptr<channel::ChannelModel> channel_model_;
  std::vector<std::vector<semantics::QoEProfile>> profiles_;
  double payload_ = 0.0;
  int slot_ = 0;
  std::vector<double> residual_;
  std::vector<double> cumulative_;
  std::vector<std::vector<double>> delivered_history_;
  // Interference seen in the previous slot: [platoon][member][k] and [platoon][k].
  std::vector<std::vector<std::vector<double>>> prev_member_interference_;
  std::vector<std::vector<double>> prev_bs_interference_;

  double reward_sum_ = 0.0;
  double qoe_sum_ = 0.0;
  std::int64_t collisions_ = 0;
  std::int64_t threshold_violations_ = 0;
  std::int64_t clipped_ = 0;
  std::int64_t repaired_ = 0;
  std::ostream* trace_ = nullptr;
};

}  // namespace samra::env
