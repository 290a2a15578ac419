#pragma once

#include <cstddef>
#include <vector>

#include "samra/mlp.hpp"
#include "samra/rng.hpp"

namespace samra::marl {

/// (joint state, joint raw action, local rewards, global reward, next joint state).
struct TransitionRecord {
  std::vector<double> state;
  std::vector<double> action;
  std::vector<double> local_rewards;
  double global_reward = 0.0;
  std::vector<double> next_state;
  bool terminal = false;
};

/// Column-major mini-batch assembled from sampled records.
struct Batch {
  Matrix states;         // joint state dim x B
  Matrix actions;        // joint action dim x B
  Matrix local_rewards;  // agents x B
  Matrix global_rewards;  // 1 x B
  Matrix next_states;
  Matrix not_terminal;   // 1 x B, 0 where the episode ended
  [[nodiscard]] Eigen::Index size() const { return states.cols(); }
};

/// Fixed-capacity FIFO ring; sampling is uniform with replacement.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(TransitionRecord record);
  [[nodiscard]] std::size_t size() const { return records_.size(); }
  [[nodiscard]] std::size_t capacity() const { return capacity_; }
  /// Records in insertion order, oldest first.
  [[nodiscard]] const TransitionRecord& oldest(std::size_t i) const;

  [[nodiscard]] std::vector<std::size_t> sample_indices(std::size_t batch_size, Rng& rng) const;
  [[nodiscard]] Batch sample(std::size_t batch_size, Rng& rng) const;
  [[nodiscard]] Batch gather(const std::vector<std::size_t>& indices) const;

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;  // next slot to overwrite once full
  std::vector<TransitionRecord> records_;
};

}  // namespace samra::marl
