#include "samra/channel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace samra::channel {

double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

Vec2 ScenarioConfig::resolved_bs_position() const {
  return bs_position.value_or(Vec2{map_width_m / 2.0, map_height_m / 2.0});
}

double ScenarioConfig::max_power_w() const { return dbm_to_watts(max_power_dbm); }
double ScenarioConfig::noise_power_w() const { return dbm_to_watts(noise_power_dbm); }

std::vector<Lane> build_lanes(const ScenarioConfig& config) {
  std::vector<Lane> lanes;
  const double spacing = config.intersection_spacing_m;
  const int per_dir = config.lanes_per_direction;
  // Lane centre offsets from the road axis: negative side travels in the
  // positive axis direction, positive side travels back.
  std::vector<double> offsets;
  for (int i = per_dir; i >= 1; --i) offsets.push_back(-(i - 0.5) * config.lane_width_m);
  for (int i = 1; i <= per_dir; ++i) offsets.push_back((i - 0.5) * config.lane_width_m);

  for (double cx = spacing / 2.0; cx < config.map_width_m; cx += spacing) {
    for (double off : offsets) {
      const bool forward = off < 0.0;
      lanes.push_back(Lane{Vec2{cx + off, forward ? 0.0 : config.map_height_m},
                           Vec2{0.0, forward ? 1.0 : -1.0}, config.map_height_m});
    }
  }
  for (double cy = spacing / 2.0; cy < config.map_height_m; cy += spacing) {
    for (double off : offsets) {
      const bool forward = off < 0.0;
      lanes.push_back(Lane{Vec2{forward ? 0.0 : config.map_width_m, cy + off},
                           Vec2{forward ? 1.0 : -1.0, 0.0}, config.map_width_m});
    }
  }
  return lanes;
}

namespace {

double wrap(double arc, double length) {
  double r = std::fmod(arc, length);
  if (r < 0.0) r += length;
  // fmod can return `length` itself after adding to a tiny negative value.
  if (r >= length) r = 0.0;
  return r;
}

Vec2 lane_point(const Lane& lane, double arc) {
  return Vec2{lane.origin.x + lane.direction.x * arc, lane.origin.y + lane.direction.y * arc};
}

// Circular distance along a lane.
double lane_separation(double a, double b, double length) {
  const double d = std::fabs(a - b);
  return std::min(d, length - d);
}

}  // namespace

TopologyState build_topology(const ScenarioConfig& config, std::uint64_t seed) {
  if (config.num_platoons < 1 || config.platoon_size < 1) {
    throw std::invalid_argument("build_topology: need at least one platoon of one vehicle");
  }
  if (!(config.platoon_gap_m >= 5.0 && config.platoon_gap_m <= 35.0)) {
    throw std::invalid_argument("build_topology: platoon gap " +
                                std::to_string(config.platoon_gap_m) +
                                " m outside [5, 35] m");
  }
  if (config.map_width_m < 1299.0 || config.map_height_m < 750.0) {
    throw std::invalid_argument("build_topology: map must be at least 1299 m x 750 m");
  }

  TopologyState topo;
  topo.lanes = build_lanes(config);
  topo.gap_m = config.platoon_gap_m;
  topo.speed_mps = config.speed_mps;
  topo.bs_position = config.resolved_bs_position();
  topo.map_width_m = config.map_width_m;
  topo.map_height_m = config.map_height_m;

  const int n = config.num_platoons;
  const int m = config.platoon_size;
  const double gap = config.platoon_gap_m;

  std::size_t capacity = 0;
  for (const auto& lane : topo.lanes) {
    capacity += static_cast<std::size_t>(std::floor(lane.length / gap));
  }
  if (static_cast<std::size_t>(n) * m > capacity) {
    throw std::invalid_argument("build_topology: " + std::to_string(n * m) +
                                " vehicles exceed lane capacity " + std::to_string(capacity) +
                                " at gap " + std::to_string(gap) + " m");
  }

  Rng rng = Rng::derive(seed, "mobility");
  topo.platoons.assign(n, {});
  for (int p = 0; p < n; ++p) {
    bool placed = false;
    for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
      const int lane_id = static_cast<int>(rng.index(topo.lanes.size()));
      const Lane& lane = topo.lanes[lane_id];
      if ((m - 1) * gap + gap > lane.length) continue;
      const double head = rng.uniform(0.0, lane.length);
      std::vector<double> arcs;
      for (int j = 0; j < m; ++j) arcs.push_back(wrap(head - j * gap, lane.length));

      bool clash = false;
      for (const auto& other : topo.vehicles) {
        if (other.lane != lane_id) continue;
        for (double a : arcs) {
          if (lane_separation(a, other.arc_m, lane.length) < gap - 1e-9) {
            clash = true;
            break;
          }
        }
        if (clash) break;
      }
      if (clash) continue;

      for (int j = 0; j < m; ++j) {
        topo.platoons[p].push_back(static_cast<int>(topo.vehicles.size()));
        topo.vehicles.push_back(Vehicle{lane_id, arcs[j], lane_point(lane, arcs[j]), p});
      }
      placed = true;
    }
    if (!placed) {
      throw std::invalid_argument("build_topology: could not place platoon " +
                                  std::to_string(p) + " without overlap");
    }
  }
  return topo;
}

TopologyState advance_mobility(const TopologyState& topology, double dt_s) {
  if (dt_s < 0.0) throw std::invalid_argument("advance_mobility: negative time step");
  TopologyState next = topology;
  if (dt_s == 0.0) return next;
  const double step = topology.speed_mps * dt_s;
  for (auto& v : next.vehicles) {
    const Lane& lane = next.lanes[v.lane];
    v.arc_m = wrap(v.arc_m + step, lane.length);
    v.position = lane_point(lane, v.arc_m);
  }
  return next;
}

double pathloss_db(double distance_m, LinkType /*link_type*/, double min_distance_m) {
  if (!(distance_m > 0.0)) {
    throw std::domain_error("pathloss_db: distance must be positive");
  }
  const double d = std::max(distance_m, min_distance_m);
  return 128.1 + 37.6 * std::log10(d / 1000.0);
}

ShadowingParams shadowing_params(const ScenarioConfig& config, LinkType link_type) {
  if (link_type == LinkType::kV2I) {
    return {config.v2i_shadow_std_db, config.v2i_decorrelation_m};
  }
  return {config.v2v_shadow_std_db, config.v2v_decorrelation_m};
}

double update_shadowing(double prev_db, double moved_m, const ShadowingParams& params, Rng& rng) {
  if (moved_m < 0.0) throw std::invalid_argument("update_shadowing: negative displacement");
  if (moved_m == 0.0) return prev_db;
  const double rho = std::exp(-moved_m / params.decorrelation_m);
  const double innovation = rng.normal(0.0, params.std_db);
  return rho * prev_db + std::sqrt(1.0 - rho * rho) * innovation;
}

double sample_fast_fading(Rng& rng) { return rng.exponential(); }

double compose_gain(double pathloss_db, double shadow_db, double fading_lin,
                    double tx_gain_dbi, double rx_gain_dbi, double noise_figure_db) {
  const double db = tx_gain_dbi + rx_gain_dbi - pathloss_db - shadow_db - noise_figure_db;
  return fading_lin * db_to_linear(db);
}

ChannelRealization::ChannelRealization(int num_transmitters, int num_receivers,
                                       int num_subchannels, double noise_w)
    : num_tx_(num_transmitters),
      num_rx_(num_receivers),
      num_k_(num_subchannels),
      noise_w_(noise_w),
      gains_(static_cast<std::size_t>(num_transmitters) * num_receivers * num_subchannels, 0.0) {
  if (!(noise_w > 0.0)) throw std::invalid_argument("ChannelRealization: noise power must be > 0");
}

double compute_interference(std::span<const Transmission> transmissions,
                            const ChannelRealization& channel, int own_platoon, Receiver rx,
                            int subchannel) {
  double total = 0.0;
  for (std::size_t other = 0; other < transmissions.size(); ++other) {
    if (static_cast<int>(other) == own_platoon) continue;
    const Transmission& t = transmissions[other];
    if (!t.active || t.subchannel != subchannel) continue;
    const double h = channel.gain(static_cast<int>(other), rx.index, subchannel);
    if (rx.base_station) {
      if (!t.v2v) total += t.text_power_w * h;
    } else if (t.v2v) {
      total += t.total_power_w() * h;
    }
  }
  return total;
}

double compute_sinr(double signal_power_w, double gain, double interference_w, double sigma2_w) {
  if (!(sigma2_w > 0.0)) throw std::invalid_argument("compute_sinr: noise power must be > 0");
  return signal_power_w * gain / (interference_w + sigma2_w);
}

}  // namespace samra::channel
