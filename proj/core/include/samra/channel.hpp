#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "samra/rng.hpp"

namespace samra::channel {

enum class LinkType { kV2V, kV2I };

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

double distance(Vec2 a, Vec2 b);

/// Radio and mobility parameters of the urban scenario.
struct ScenarioConfig {
  double map_width_m = 1299.0;
  double map_height_m = 750.0;
  double lane_width_m = 3.5;
  double intersection_spacing_m = 433.0;
  int lanes_per_direction = 2;

  int num_platoons = 4;
  int platoon_size = 5;
  double platoon_gap_m = 20.0;
  double speed_mps = 10.0;  // 36 km/h

  double carrier_ghz = 2.0;
  int num_subchannels = 4;
  double subchannel_bandwidth_hz = 180e3;
  double max_power_dbm = 30.0;
  double noise_power_dbm = -114.0;

  double bs_antenna_height_m = 25.0;
  double vehicle_antenna_height_m = 1.5;
  double bs_antenna_gain_dbi = 8.0;
  double vehicle_antenna_gain_dbi = 3.0;
  double bs_noise_figure_db = 5.0;
  double vehicle_noise_figure_db = 9.0;

  double v2i_shadow_std_db = 8.0;
  double v2v_shadow_std_db = 3.0;
  double v2i_decorrelation_m = 50.0;
  double v2v_decorrelation_m = 10.0;
  double min_link_distance_m = 1.0;

  int large_scale_period_slots = 100;
  int fast_fading_period_slots = 1;
  double slot_duration_s = 1e-3;

  /// Defaults to the map centre when unset.
  std::optional<Vec2> bs_position;

  [[nodiscard]] Vec2 resolved_bs_position() const;
  [[nodiscard]] double max_power_w() const;
  [[nodiscard]] double noise_power_w() const;
};

/// One straight lane; vehicles travel from `origin` along `direction`
/// and wrap toroidally after `length` metres.
struct Lane {
  Vec2 origin;
  Vec2 direction;
  double length = 0.0;
};

std::vector<Lane> build_lanes(const ScenarioConfig& config);

struct Vehicle {
  int lane = 0;
  double arc_m = 0.0;  // position along the lane in [0, length)
  Vec2 position;
  int platoon = 0;
};

struct TopologyState {
  std::vector<Lane> lanes;
  std::vector<Vehicle> vehicles;
  /// platoon id -> ordered vehicle ids, index 0 is the leader.
  std::vector<std::vector<int>> platoons;
  double gap_m = 0.0;
  double speed_mps = 0.0;
  Vec2 bs_position;
  double map_width_m = 0.0;
  double map_height_m = 0.0;

  [[nodiscard]] int leader(int platoon) const { return platoons.at(platoon).front(); }
  [[nodiscard]] std::size_t num_vehicles() const { return vehicles.size(); }
};

/// Places N platoons of M vehicles contiguously on random lanes.
/// Throws std::invalid_argument for a gap outside [5, 35] m or when the lanes
/// cannot hold N*M vehicles at that gap.
TopologyState build_topology(const ScenarioConfig& config, std::uint64_t seed);

/// Advances every vehicle along its lane; platoons proceed straight through
/// intersections and wrap at the map edge.
TopologyState advance_mobility(const TopologyState& topology, double dt_s);

/// 128.1 + 37.6 log10(d[km]) after applying the distance floor.
/// Throws std::domain_error for non-positive distances.
double pathloss_db(double distance_m, LinkType link_type, double min_distance_m = 1.0);

struct ShadowingParams {
  double std_db = 3.0;
  double decorrelation_m = 10.0;
};

ShadowingParams shadowing_params(const ScenarioConfig& config, LinkType link_type);

/// Correlated shadowing update: rho*prev + sqrt(1-rho^2)*N(0, std^2), rho = exp(-moved/d_corr).
double update_shadowing(double prev_db, double moved_m, const ShadowingParams& params, Rng& rng);

/// Rayleigh power factor, Exp(1).
double sample_fast_fading(Rng& rng);

double compose_gain(double pathloss_db, double shadow_db, double fading_lin,
                    double tx_gain_dbi, double rx_gain_dbi, double noise_figure_db);

struct LinkState {
  double pathloss_db = 0.0;
  double shadow_db = 0.0;
  double fading = 1.0;
  double tx_gain_dbi = 0.0;
  double rx_gain_dbi = 0.0;
  double noise_figure_db = 0.0;
  double gain = 1.0;
};

/// Linear gains from each platoon leader (transmitter) to every receiver
/// (all vehicles, then the base station) on every subchannel.
class ChannelRealization {
 public:
  ChannelRealization() = default;
  ChannelRealization(int num_transmitters, int num_receivers, int num_subchannels,
                     double noise_w);

  [[nodiscard]] double gain(int tx, int rx, int k) const { return gains_[offset(tx, rx, k)]; }
  void set_gain(int tx, int rx, int k, double value) { gains_[offset(tx, rx, k)] = value; }

  [[nodiscard]] int num_transmitters() const { return num_tx_; }
  /// Vehicles plus the base station.
  [[nodiscard]] int num_receivers() const { return num_rx_; }
  [[nodiscard]] int num_subchannels() const { return num_k_; }
  [[nodiscard]] int bs_receiver() const { return num_rx_ - 1; }
  [[nodiscard]] double noise_w() const { return noise_w_; }
  [[nodiscard]] std::int64_t slot() const { return slot_; }
  void set_slot(std::int64_t slot) { slot_ = slot; }
  [[nodiscard]] const std::vector<double>& raw() const { return gains_; }

  friend bool operator==(const ChannelRealization&, const ChannelRealization&) = default;

 private:
  [[nodiscard]] std::size_t offset(int tx, int rx, int k) const {
    return (static_cast<std::size_t>(tx) * num_rx_ + rx) * num_k_ + k;
  }

  int num_tx_ = 0;
  int num_rx_ = 0;
  int num_k_ = 0;
  double noise_w_ = 1.0;
  std::int64_t slot_ = 0;
  std::vector<double> gains_;
};

/// One platoon's transmission in a slot, as seen by the interference model.
struct Transmission {
  int subchannel = 0;
  bool v2v = true;  // rho
  bool active = true;  // beta: the platoon occupies `subchannel`
  double text_power_w = 0.0;
  double image_power_w = 0.0;

  [[nodiscard]] double total_power_w() const { return text_power_w + image_power_w; }
};

struct Receiver {
  int index = 0;       // receiver column in the realization
  bool base_station = false;
};

/// Co-channel interference at `rx` on subchannel k from every platoon other
/// than `own_platoon`. V2V receivers see only V2V transmitters (total power);
/// the base station sees only V2I transmitters (text power).
double compute_interference(std::span<const Transmission> transmissions,
                            const ChannelRealization& channel, int own_platoon, Receiver rx,
                            int subchannel);

/// p*h / (I + sigma^2). Throws std::invalid_argument if sigma2_w <= 0.
double compute_sinr(double signal_power_w, double gain, double interference_w, double sigma2_w);

double db_to_linear(double db);
double linear_to_db(double lin);
double dbm_to_watts(double dbm);

}  // namespace samra::channel
