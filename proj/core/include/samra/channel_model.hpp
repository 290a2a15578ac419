#pragma once

#include <cstdint>
#include <vector>

#include "samra/channel.hpp"
#include "samra/rng.hpp"

namespace samra::channel {

/// Two-clock channel process: path loss and shadowing refresh every
/// `large_scale_period_slots`, Rayleigh fading every `fast_fading_period_slots`.
/// Text and image streams of a link share the same draw within a slot.
class ChannelModel {
 public:
  ChannelModel(ScenarioConfig config, std::uint64_t seed);

  /// Starts a new realization sequence at slot 0 for `topology`.
  void reset(const TopologyState& topology);
  /// Moves to the next slot using the (already advanced) topology.
  void advance(const TopologyState& topology);

  [[nodiscard]] const ChannelRealization& realization() const { return realization_; }
  [[nodiscard]] LinkState link_state(int tx_platoon, int rx, int k) const;
  [[nodiscard]] std::int64_t slot() const { return slot_; }

 private:
  void refresh_large_scale(const TopologyState& topology, bool initial);
  void redraw_fading();
  void compose();
  [[nodiscard]] std::size_t link_index(int tx, int rx) const {
    return static_cast<std::size_t>(tx) * num_rx_ + rx;
  }

  ScenarioConfig config_;
  Rng fading_rng_;
  Rng shadow_rng_;
  int num_tx_ = 0;
  int num_rx_ = 0;
  int num_k_ = 0;
  std::int64_t slot_ = 0;
  std::vector<int> tx_vehicle_;
  std::vector<double> pathloss_db_;
  std::vector<double> shadow_db_;
  std::vector<double> fading_;
  std::vector<Vec2> anchor_positions_;
  ChannelRealization realization_;
};

}  // namespace samra::channel
