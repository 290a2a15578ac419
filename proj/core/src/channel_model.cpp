#include "samra/channel_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace samra::channel {

ChannelModel::ChannelModel(ScenarioConfig config, std::uint64_t seed)
    : config_(std::move(config)),
      fading_rng_(Rng::derive(seed, "fading")),
      shadow_rng_(Rng::derive(seed, "shadowing")) {
  if (config_.large_scale_period_slots < 1 || config_.fast_fading_period_slots < 1) {
    throw std::invalid_argument("ChannelModel: update periods must be >= 1 slot");
  }
}

void ChannelModel::reset(const TopologyState& topology) {
  num_tx_ = static_cast<int>(topology.platoons.size());
  num_rx_ = static_cast<int>(topology.num_vehicles()) + 1;
  num_k_ = config_.num_subchannels;
  slot_ = 0;
  tx_vehicle_.clear();
  for (int p = 0; p < num_tx_; ++p) tx_vehicle_.push_back(topology.leader(p));

  const std::size_t links = static_cast<std::size_t>(num_tx_) * num_rx_;
  pathloss_db_.assign(links, 0.0);
  shadow_db_.assign(links, 0.0);
  fading_.assign(links * num_k_, 1.0);
  realization_ = ChannelRealization(num_tx_, num_rx_, num_k_, config_.noise_power_w());

  refresh_large_scale(topology, /*initial=*/true);
  redraw_fading();
  compose();
}

void ChannelModel::advance(const TopologyState& topology) {
  ++slot_;
  if (slot_ % config_.large_scale_period_slots == 0) refresh_large_scale(topology, false);
  if (slot_ % config_.fast_fading_period_slots == 0) redraw_fading();
  compose();
}

void ChannelModel::refresh_large_scale(const TopologyState& topology, bool initial) {
  const Vec2 bs = topology.bs_position;
  const double dh = config_.bs_antenna_height_m - config_.vehicle_antenna_height_m;
  std::vector<double> moved(topology.num_vehicles(), 0.0);
  if (!initial) {
    for (std::size_t v = 0; v < moved.size(); ++v) {
      moved[v] = distance(anchor_positions_[v], topology.vehicles[v].position);
    }
  }

  for (int tx = 0; tx < num_tx_; ++tx) {
    const int tx_vehicle = tx_vehicle_[tx];
    const Vec2 tx_pos = topology.vehicles[tx_vehicle].position;
    for (int rx = 0; rx < num_rx_; ++rx) {
      const std::size_t idx = link_index(tx, rx);
      const bool to_bs = rx == num_rx_ - 1;
      if (!to_bs && rx == tx_vehicle) continue;  // no self link
      const LinkType type = to_bs ? LinkType::kV2I : LinkType::kV2V;
      double d = 0.0;
      double moved_m = moved[tx_vehicle];
      if (to_bs) {
        d = std::hypot(distance(tx_pos, bs), dh);
      } else {
        d = distance(tx_pos, topology.vehicles[rx].position);
        moved_m += moved[rx];
      }
      pathloss_db_[idx] = pathloss_db(std::max(d, 1e-9), type, config_.min_link_distance_m);
      const ShadowingParams sp = shadowing_params(config_, type);
      if (initial) {
        shadow_db_[idx] = shadow_rng_.normal(0.0, sp.std_db);
      } else {
        shadow_db_[idx] = update_shadowing(shadow_db_[idx], moved_m, sp, shadow_rng_);
      }
    }
  }
  anchor_positions_.clear();
  for (const auto& v : topology.vehicles) anchor_positions_.push_back(v.position);
}

void ChannelModel::redraw_fading() {
  for (int tx = 0; tx < num_tx_; ++tx) {
    for (int rx = 0; rx < num_rx_; ++rx) {
      for (int k = 0; k < num_k_; ++k) {
        fading_[link_index(tx, rx) * num_k_ + k] = sample_fast_fading(fading_rng_);
      }
    }
  }
}

LinkState ChannelModel::link_state(int tx, int rx, int k) const {
  const bool to_bs = rx == num_rx_ - 1;
  LinkState s;
  const std::size_t idx = link_index(tx, rx);
  s.pathloss_db = pathloss_db_[idx];
  s.shadow_db = shadow_db_[idx];
  s.fading = fading_[idx * num_k_ + k];
  s.tx_gain_dbi = config_.vehicle_antenna_gain_dbi;
  s.rx_gain_dbi = to_bs ? config_.bs_antenna_gain_dbi : config_.vehicle_antenna_gain_dbi;
  s.noise_figure_db = to_bs ? config_.bs_noise_figure_db : config_.vehicle_noise_figure_db;
  if (!to_bs && rx == tx_vehicle_[tx]) {
    s.fading = 0.0;
    s.gain = 0.0;
    return s;
  }
  s.gain = compose_gain(s.pathloss_db, s.shadow_db, s.fading, s.tx_gain_dbi, s.rx_gain_dbi,
                        s.noise_figure_db);
  return s;
}

void ChannelModel::compose() {
  realization_.set_slot(slot_);
  for (int tx = 0; tx < num_tx_; ++tx) {
    for (int rx = 0; rx < num_rx_; ++rx) {
      for (int k = 0; k < num_k_; ++k) {
        realization_.set_gain(tx, rx, k, link_state(tx, rx, k).gain);
      }
    }
  }
}

}  // namespace samra::channel
